#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "femem/errors.hpp"
#include "femem/extraction.hpp"
#include "femem/inference.hpp"

using namespace femem;

namespace {

Eigen::MatrixXd random_weights(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-1.0, 1.0);
    return w;
}

Eigen::MatrixXd random_inputs(int n, int count, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, count);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    return x;
}

double conductance(const Crossbar& x, int i, int j, double v) {
    return current_total(v, x.t_kelvin, x.p, x.cell(i, j)) / v;
}

}  // namespace

TEST_CASE("map_weights") {
    const ConductionParams p = default_params();
    Eigen::MatrixXd w(1, 3);
    w << 1.0, 0.0, -1.0;
    const WeightMapping m = map_weights(w, 11, p);
    CHECK(m.g_min < m.g_max);
    CHECK(m.g_pos(0, 0) == doctest::Approx(m.g_max).epsilon(1e-14));
    CHECK(m.g_neg(0, 0) == m.g_min);
    CHECK(m.g_pos(1, 0) == m.g_neg(1, 0));
    CHECK(m.g_neg(2, 0) == doctest::Approx(m.g_max).epsilon(1e-14));
    CHECK(m.g_min == doctest::Approx(current_total(0.1, 300.0, p, DeviceState{}) / 0.1).epsilon(1e-14));

    const Eigen::MatrixXd r = random_weights(8, 8, 1);
    const WeightMapping q = map_weights(r, 11, p);
    CHECK((r - q.decode()).cwiseAbs().maxCoeff() <= 0.5 / 10.0 + 1e-12);
    CHECK(q.quantization_step_bound() == doctest::Approx(0.05));
    CHECK(q.g_pos.minCoeff() >= q.g_min);
    CHECK(q.g_pos.maxCoeff() <= q.g_max * (1.0 + 1e-12));
    const WeightMapping c = map_weights(r, std::nullopt, p);
    CHECK((r - c.decode()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd bad = r;
    bad(0, 0) = 1.5;
    CHECK_THROWS_AS(map_weights(bad, 11, p), ModelError);
    CHECK_THROWS_AS(map_weights(r, 1, p), ModelError);
}

TEST_CASE("state_for_conductance and input predistortion invert the device curve") {
    const ConductionParams p = default_params();
    for (double w : {0.0, 0.25, 0.8, 1.0}) {
        DeviceState s;
        s.w = w;
        const double g = current_total(0.1, 300.0, p, s) / 0.1;
        CHECK(state_for_conductance(g, p, 0.1, 300.0) == doctest::Approx(w).epsilon(1e-12));
    }
    const double i_full = current_total(0.1, 300.0, p, DeviceState{});
    for (double f : {-0.7, 0.1, 0.5, 1.0}) {
        const double v = predistort_input(f, p, 0.1, 300.0);
        CHECK(current_total(v, 300.0, p, DeviceState{}) == doctest::Approx(f * i_full).epsilon(1e-12));
    }
    CHECK(predistort_input(0.0, p, 0.1, 300.0) == 0.0);
    CHECK_THROWS_AS(predistort_input(1.2, p, 0.1, 300.0), ModelError);
}

TEST_CASE("write-verify") {
    const ConductionParams p = default_params();
    UpdateModel quiet;
    quiet.c2c_rel = 0.0;
    Rng rng(10);

    SUBCASE("target equal to the current state needs no pulses") {
        const Crossbar x = build(3, 3, p, 0.1, 2);
        Eigen::MatrixXd t(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t(i, j) = conductance(x, i, j, 0.1);
        const WriteVerifyResult r = program_write_verify(x, t, quiet, 0.02, 100, rng);
        CHECK(r.pulses.maxCoeff() == 0);
        CHECK(r.converged.all());
    }
    SUBCASE("noiseless mid-range target converges within n_full") {
        const Crossbar x = build(1, 1, p, 0.0, 0);
        const WeightMapping wm = map_weights(Eigen::MatrixXd::Zero(1, 1), std::nullopt, p);
        Eigen::MatrixXd t(1, 1);
        t(0, 0) = std::sqrt(wm.g_min * wm.g_max);
        const WriteVerifyResult r = program_write_verify(x, t, quiet, 0.02, 500, rng);
        CHECK(r.converged(0, 0));
        CHECK(r.pulses(0, 0) <= quiet.n_full);
    }
    SUBCASE("10 % cycle-to-cycle noise over 100 cells") {
        const UpdateModel noisy;
        const Crossbar x = build(10, 10, p, 0.1, 7);
        Rng trng(77);
        Eigen::MatrixXd t(10, 10);
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                DeviceState lo = x.cell(i, j), hi = lo;
                lo.w = 0.0;
                hi.w = 1.0;
                const double g_lo = current_total(0.1, 300.0, p, lo) / 0.1;
                const double g_hi = current_total(0.1, 300.0, p, hi) / 0.1;
                t(i, j) = g_lo + trng.uniform(0.1, 0.9) * (g_hi - g_lo);
            }
        }
        const WriteVerifyResult r = program_write_verify(x, t, noisy, 0.02, 3 * noisy.n_full, rng);
        CHECK(r.converged.count() >= 95);
        CHECK_FALSE(r.unreachable.any());
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                const DeviceState& s = r.array.cell(i, j);
                CHECK(s.w >= 0.0);
                CHECK(s.w <= 1.0);
            }
        }
    }
    SUBCASE("unreachable targets are flagged and clamped") {
        const Crossbar x = build(1, 2, p, 0.0, 0);
        Eigen::MatrixXd t(1, 2);
        t << 1e-20, 1.0;
        const WriteVerifyResult r = program_write_verify(x, t, quiet, 0.02, 200, rng);
        CHECK(r.unreachable.all());
        CHECK(r.array.cell(0, 0).w == 0.0);
        const WeightMapping wm = map_weights(Eigen::MatrixXd::Zero(1, 1), std::nullopt, p);
        CHECK(std::abs(conductance(r.array, 0, 1, 0.1) - wm.g_max) <= 0.02 * (wm.g_max - wm.g_min));
    }
    const Crossbar x = build(2, 2, p, 0.0, 0);
    CHECK_THROWS_AS(program_write_verify(x, Eigen::MatrixXd::Zero(3, 2), quiet, 0.02, 5, rng), ModelError);
}

TEST_CASE("differential pair cancels a common conductance factor") {
    const ConductionParams p = default_params();
    Crossbar pos = build(3, 2, p, 0.0, 0), neg = pos;
    Rng rng(4);
    for (DeviceState& s : pos.cells) s.w = rng.uniform();
    for (DeviceState& s : neg.cells) s.w = rng.uniform();
    Eigen::VectorXd v(3);
    v << 0.05, -0.1, 0.02;
    const Eigen::VectorXd d0 = mvm_read(pos, v, 0.1) - mvm_read(neg, v, 0.1);
    for (DeviceState& s : pos.cells) s.d2d_log10 = 0.3;
    for (DeviceState& s : neg.cells) s.d2d_log10 = 0.3;
    const Eigen::VectorXd d1 = mvm_read(pos, v, 0.1) - mvm_read(neg, v, 0.1);
    CHECK((d1 - std::pow(10.0, -0.3) * d0).norm() <= 1e-12 * d0.norm());
}

TEST_CASE("MVM Monte Carlo") {
    const ConductionParams p = default_params();
    const Eigen::MatrixXd w = random_weights(4, 4, 3);
    const Eigen::MatrixXd x = random_inputs(4, 6, 4);

    SUBCASE("ideal limit") {
        const MvmErrorStats s = mvm_error_mc(w, x, std::nullopt, 0.0, 0.0, 3, 1, p);
        for (double e : s.per_trial) CHECK(e < 1e-6);
    }
    SUBCASE("quantization alone stays within its bound") {
        const MvmErrorStats s = mvm_error_mc(w, x, 11, 0.0, 0.0, 3, 1, p);
        for (double e : s.per_trial) CHECK(e <= s.quantization_bound);
        CHECK(s.median > 0.0);
    }
    SUBCASE("deterministic per seed") {
        const MvmErrorStats a = mvm_error_mc(w, x, 11, 0.1, 0.1, 5, 42, p);
        const MvmErrorStats b = mvm_error_mc(w, x, 11, 0.1, 0.1, 5, 42, p);
        CHECK(a.per_trial == b.per_trial);
        CHECK(a.ci_low <= a.median);
        CHECK(a.median <= a.ci_high);
    }
    SUBCASE("coarser quantization does not help") {
        const MvmErrorStats fine = mvm_error_mc(w, x, 33, 0.0, 0.0, 1, 1, p);
        const MvmErrorStats coarse = mvm_error_mc(w, x, 3, 0.0, 0.0, 1, 1, p);
        CHECK(coarse.median >= fine.median);
    }
    CHECK_THROWS_AS(mvm_error_mc(w, x, 11, 0.1, 0.1, 0, 1, p), ModelError);
    CHECK_THROWS_AS(mvm_error_mc(w, Eigen::MatrixXd::Ones(3, 2), 11, 0.1, 0.1, 1, 1, p), ModelError);
}
