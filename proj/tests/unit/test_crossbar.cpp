#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "femem/crossbar.hpp"
#include "femem/errors.hpp"

using namespace femem;

namespace {

ConductionParams ohmic_params() {
    CalibrationTargets tg;
    tg.selection_ratio = 2.0;
    return calibrate(tg, ConductionParams{});
}

Crossbar filled(int rows, int cols, const ConductionParams& p, double w) {
    Crossbar x = build(rows, cols, p, 0.0, 0);
    for (DeviceState& s : x.cells) s.w = w;
    return x;
}

BiasScheme read_bias(int rows, int cols, int r, int c, double v) {
    BiasScheme b;
    b.row_drive.assign(rows, LineDrive::floating());
    b.col_drive.assign(cols, LineDrive::floating());
    b.row_drive[r] = LineDrive::voltage(v);
    b.col_drive[c] = LineDrive::virtual_ground();
    return b;
}

// Independent oracle: over-relaxed Gauss-Seidel sweeps in which each floating line
// voltage is found by bisection on its own KCL equation with the others frozen.
void brute_force(const Crossbar& x, const BiasScheme& b, std::vector<double>& rv, std::vector<double>& cv) {
    rv.assign(x.rows, 0.0);
    cv.assign(x.cols, 0.0);
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        if (b.row_drive[i].kind == LineDrive::Kind::voltage) rv[i] = b.row_drive[i].volts;
        lo = std::min(lo, rv[i]);
        hi = std::max(hi, rv[i]);
    }
    for (int j = 0; j < x.cols; ++j) {
        if (b.col_drive[j].kind == LineDrive::Kind::voltage) cv[j] = b.col_drive[j].volts;
        lo = std::min(lo, cv[j]);
        hi = std::max(hi, cv[j]);
    }
    auto bisect = [&](auto&& net) {
        double a = lo, c = hi;
        for (int k = 0; k < 200; ++k) {
            const double m = 0.5 * (a + c);
            if (net(m) > 0.0) c = m; else a = m;
        }
        return 0.5 * (a + c);
    };
    const double omega = 1.5;
    for (int sweep = 0; sweep < 20000; ++sweep) {
        double moved = 0.0;
        for (int i = 0; i < x.rows; ++i) {
            if (b.row_drive[i].driven()) continue;
            const double v = bisect([&](double vi) {
                double s = 0.0;
                for (int j = 0; j < x.cols; ++j) s += current_total(vi - cv[j], x.t_kelvin, x.p, x.cell(i, j));
                return s;
            });
            moved = std::max(moved, std::abs(v - rv[i]));
            rv[i] += omega * (v - rv[i]);
        }
        for (int j = 0; j < x.cols; ++j) {
            if (b.col_drive[j].driven()) continue;
            const double v = bisect([&](double vj) {
                double s = 0.0;
                for (int i = 0; i < x.rows; ++i) s += current_total(vj - rv[i], x.t_kelvin, x.p, x.cell(i, j));
                return s;
            });
            moved = std::max(moved, std::abs(v - cv[j]));
            cv[j] += omega * (v - cv[j]);
        }
        if (moved < 1e-16) break;
    }
}

}  // namespace

TEST_CASE("build") {
    const ConductionParams p = default_params();
    const Crossbar one = build(1, 1, p, 0.1, 3);
    CHECK(one.cells.size() == 1);
    CHECK(one.cell(0, 0).w == 0.0);
    CHECK(build(4, 5, p, 0.1, 9).cells == build(4, 5, p, 0.1, 9).cells);
    CHECK(build(4, 5, p, 0.1, 9).cells != build(4, 5, p, 0.1, 10).cells);
    CHECK_THROWS_AS(build(0, 3, p, 0.1, 1), ModelError);

    std::vector<double> d;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (const DeviceState& s : build(10, 10, p, 0.1, seed).cells) d.push_back(s.d2d_log10);
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    CHECK(std::sqrt(ss / (d.size() - 1)) == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("all lines driven: closed-form cell currents") {
    const ConductionParams p = default_params();
    Crossbar x = build(2, 3, p, 0.1, 4);
    x.cell(1, 2).w = 0.6;
    BiasScheme b;
    b.row_drive = {LineDrive::voltage(0.4), LineDrive::voltage(-0.2)};
    b.col_drive = {LineDrive::virtual_ground(), LineDrive::voltage(0.1), LineDrive::voltage(0.3)};
    const NetworkSolution s = solve_network(x, b);
    CHECK(s.iterations == 0);
    const double rv[] = {0.4, -0.2};
    const double cv[] = {0.0, 0.1, 0.3};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(s.cell_i(i, j) == current_total(rv[i] - cv[j], 300.0, p, x.cell(i, j)));
    }
}

TEST_CASE("2x2 Ohmic divider and margin of three") {
    const ConductionParams p = ohmic_params();
    const Crossbar x = filled(2, 2, p, 1.0);
    const double v = 0.5;
    const NetworkSolution s = solve_network(x, read_bias(2, 2, 0, 0, v));
    CHECK(s.row_v[1] == doctest::Approx(v / 3.0).epsilon(1e-10));
    CHECK(s.col_v[1] == doctest::Approx(2.0 * v / 3.0).epsilon(1e-10));
    CHECK(s.kcl_residual < 1e-12);
    CHECK(sneak_margin(x, 0, 0, v).margin == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("3x3 nonlinear solve matches the brute-force oracle") {
    const ConductionParams p = default_params();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Crossbar x = build(3, 3, p, 0.1, seed);
        Rng rng(seed + 100);
        for (DeviceState& c : x.cells) c.w = rng.uniform();
        BiasScheme b = read_bias(3, 3, 1, 2, 0.5);
        b.row_drive[2] = LineDrive::voltage(0.2);
        const NetworkSolution s = solve_network(x, b);
        std::vector<double> rv, cv;
        brute_force(x, b, rv, cv);
        for (int i = 0; i < 3; ++i) CHECK(s.row_v[i] == doctest::Approx(rv[i]).epsilon(1e-9));
        for (int j = 0; j < 3; ++j) CHECK(s.col_v[j] == doctest::Approx(cv[j]).epsilon(1e-9));
        CHECK(s.kcl_residual < 1e-12);
    }
}

TEST_CASE("KCL and conservation") {
    const ConductionParams p = default_params();
    Crossbar x = build(6, 5, p, 0.1, 21);
    Rng rng(5);
    for (DeviceState& c : x.cells) c.w = rng.uniform();
    BiasScheme b = read_bias(6, 5, 2, 3, 0.5);
    b.row_drive[4] = LineDrive::voltage(-0.3);
    b.col_drive[0] = LineDrive::voltage(0.1);
    const NetworkSolution s = solve_network(x, b);
    for (int i = 0; i < 6; ++i) {
        if (b.row_drive[i].driven()) continue;
        double net = 0.0;
        for (int j = 0; j < 5; ++j) net += s.cell_i(i, j);
        CHECK(std::abs(net) < 1e-12);
    }
    CHECK(std::abs(s.row_i.sum() + s.col_i.sum()) < 1e-12);
}

TEST_CASE("linear devices: Newton equals the direct linear solve") {
    const ConductionParams p = ohmic_params();
    Crossbar x = build(4, 4, p, 0.2, 8);
    const NetworkSolution s = solve_network(x, read_bias(4, 4, 0, 0, 0.3));
    // Nodal matrix for rows 1..3 and cols 1..3.
    const double v = 0.3;
    Eigen::MatrixXd g(6, 6);
    g.setZero();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6);
    auto cond = [&](int i, int j) { return current_total(1.0, 300.0, p, x.cell(i, j)); };
    for (int i = 1; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            g(i - 1, i - 1) += cond(i, j);
            if (j > 0) g(i - 1, 2 + j) -= cond(i, j);
        }
    }
    for (int j = 1; j < 4; ++j) {
        for (int i = 0; i < 4; ++i) {
            g(2 + j, 2 + j) += cond(i, j);
            if (i > 0) g(2 + j, i - 1) -= cond(i, j);
            else rhs(2 + j) += cond(i, j) * v;
        }
    }
    const Eigen::VectorXd sol = g.partialPivLu().solve(rhs);
    for (int i = 1; i < 4; ++i) CHECK(s.row_v[i] == doctest::Approx(sol(i - 1)).epsilon(1e-10));
    for (int j = 1; j < 4; ++j) CHECK(s.col_v[j] == doctest::Approx(sol(2 + j)).epsilon(1e-10));
}

TEST_CASE("solver input checks") {
    const ConductionParams p = default_params();
    const Crossbar x = build(2, 2, p, 0.0, 0);
    BiasScheme none;
    none.row_drive.assign(2, LineDrive::floating());
    none.col_drive.assign(2, LineDrive::floating());
    CHECK_THROWS_AS(solve_network(x, none), ModelError);
    BiasScheme short_b = none;
    short_b.row_drive.pop_back();
    CHECK_THROWS_AS(solve_network(x, short_b), ModelError);
    BiasScheme vg_row = read_bias(2, 2, 0, 0, 0.1);
    vg_row.row_drive[1] = LineDrive::virtual_ground();
    CHECK_THROWS_AS(solve_network(x, vg_row), ModelError);
    const Crossbar big = build(65, 2, p, 0.0, 0);
    BiasScheme bb;
    bb.row_drive.assign(65, LineDrive::floating());
    bb.row_drive[0] = LineDrive::voltage(0.1);
    bb.col_drive.assign(2, LineDrive::virtual_ground());
    CHECK_THROWS_AS(solve_network(big, bb), ModelError);
}

TEST_CASE("mvm_read") {
    const ConductionParams p = default_params();
    Crossbar x = build(4, 4, p, 0.1, 12);
    Rng rng(3);
    for (DeviceState& c : x.cells) c.w = rng.uniform();

    CHECK(mvm_read(x, Eigen::VectorXd::Zero(4)).isZero(0.0));
    Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(4);
    one_hot[2] = 0.1;
    const Eigen::VectorXd y1 = mvm_read(x, one_hot);
    for (int j = 0; j < 4; ++j) CHECK(y1[j] == current_total(0.1, 300.0, p, x.cell(2, j)));

    const Eigen::VectorXd v = Eigen::VectorXd::Constant(4, 0.1);
    const Eigen::VectorXd y = mvm_read(x, v);
    for (int j = 0; j < 4; ++j) {
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) sum += current_total(0.1, 300.0, p, x.cell(i, j));
        CHECK(y[j] == doctest::Approx(sum).epsilon(1e-14));
    }

    Eigen::VectorXd too_big = v;
    too_big[0] = 0.31;
    CHECK_THROWS_AS(mvm_read(x, too_big), ModelError);
    CHECK_THROWS_AS(mvm_read(x, Eigen::VectorXd::Zero(3)), ModelError);
}

TEST_CASE("mvm_read superposition: linear for Ohmic cells, not for the default") {
    Eigen::VectorXd a(3), b(3);
    a << 0.05, 0.0, 0.1;
    b << 0.1, 0.05, 0.0;
    for (bool ohmic : {true, false}) {
        const ConductionParams p = ohmic ? ohmic_params() : default_params();
        const Crossbar x = build(3, 2, p, 0.1, 5);
        const Eigen::VectorXd sum = mvm_read(x, a + b);
        const Eigen::VectorXd parts = mvm_read(x, a) + mvm_read(x, b);
        const double rel = (sum - parts).norm() / sum.norm();
        if (ohmic) {
            CHECK(rel < 1e-12);
        } else {
            CHECK(rel > 1e-3);
        }
    }
}

TEST_CASE("V/2 write scheme") {
    const ConductionParams p = default_params();
    const UpdateModel m;
    Rng rng(6);
    const Crossbar x = filled(4, 4, p, 1.0);

    SUBCASE("half bias below onset: no disturb") {
        const WriteReport r = write_v_half(x, 1, 2, {1.2, 50e-6}, m, rng);
        CHECK(r.disturbed_cells == 0);
        REQUIRE(r.changed.size() == 1);
        CHECK(r.changed[0].selected);
        CHECK(r.changed[0].dw < 0.0);
    }
    SUBCASE("half bias above onset disturbs the selected row and column only") {
        const WriteReport r = write_v_half(x, 1, 2, {2.4, 50e-6}, m, rng);
        CHECK(r.disturbed_cells == 6);
        for (const DisturbEntry& e : r.changed) {
            CHECK((e.row == 1 || e.col == 2));
            CHECK(e.dw < 0.0);
        }
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                if (i != 1 && j != 2) CHECK(r.array.cell(i, j) == x.cell(i, j));
            }
        }
    }
    SUBCASE("1x1 energy equals the single-pulse energy") {
        const Crossbar one = filled(1, 1, p, 0.0);
        const PulseSpec pulse{-1.6, 50e-6};
        CHECK(write_v_half(one, 0, 0, pulse, m, rng).energy == write_energy(pulse, one.cell(0, 0), p));
    }
    CHECK_THROWS_AS(write_v_half(x, 4, 0, {1.0, 1e-6}, m, rng), ModelError);
}

TEST_CASE("sneak margin") {
    const ConductionParams p = default_params();
    const Crossbar row = filled(1, 5, p, 1.0);
    CHECK(sneak_margin(row, 0, 2, 0.5).margin == std::numeric_limits<double>::infinity());
    const double nl = sneak_margin(filled(3, 3, p, 1.0), 1, 1, 0.5).margin;
    const double lin = sneak_margin(filled(3, 3, ohmic_params(), 1.0), 1, 1, 0.5).margin;
    CHECK(nl >= 3.0 * lin);
}
