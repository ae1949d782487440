// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "femem/commands.hpp"
#include "femem/conduction.hpp"
#include "femem/config.hpp"
#include "femem/crossbar.hpp"
#include "femem/device.hpp"
#include "femem/extraction.hpp"
#include "femem/inference.hpp"

using namespace femem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const config::Config& defaults() {
    static const config::Config c;
    return c;
}

const ConductionParams& params() {
    static const ConductionParams p = config::conduction_params(defaults());
    return p;
}

DeviceState at(double w) {
    DeviceState s;
    s.w = w;
    return s;
}

const std::vector<double> kTemps{300.0, 320.0, 340.0, 360.0};

template <class F>
SweepSet sweeps(F&& j_of, double v_lo, double v_hi, double dv) {
    SweepSet out;
    for (double t : kTemps) {
        Sweep s{t, {}};
        const int n = static_cast<int>(std::lround((v_hi - v_lo) / dv));
        for (int k = 0; k <= n; ++k) {
            const double v = v_lo + k * dv;
            s.points.push_back({v, j_of(v, t)});
        }
        out.push_back(std::move(s));
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

// Floating line voltages by over-relaxed Gauss-Seidel, each line solved by
// bisection on its own KCL equation with the other voltages frozen.
void nodal_oracle(const Crossbar& x, const BiasScheme& b, std::vector<double>& rv, std::vector<double>& cv) {
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

BiasScheme read_bias(int rows, int cols, int r, int c, double v) {
    BiasScheme b;
    b.row_drive.assign(rows, LineDrive::floating());
    b.col_drive.assign(cols, LineDrive::floating());
    b.row_drive[r] = LineDrive::voltage(v);
    b.col_drive[c] = LineDrive::virtual_ground();
    return b;
}

ConductionParams ohmic_twin() {
    CalibrationTargets tg = config::calibration_targets(defaults());
    tg.selection_ratio = 2.0;
    return calibrate(tg, params());
}

Crossbar uniform_array(int n, const ConductionParams& p, double w) {
    Crossbar x = build(n, n, p, 0.0, 0);
    for (DeviceState& s : x.cells) s.w = w;
    return x;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome c1_on_off() {
    const double r = on_off(params(), 300.0, 0.1);
    return {r >= 7.0 && r <= 12.0, fmt("ON/OFF(0.1 V) = %.6g, required [7, 12]", r)};
}

Outcome c2_selection() {
    const double r = self_selection_ratio(0.5, 300.0, params(), at(1.0));
    return {r > 40.0, fmt("I(0.5 V)/I(0.25 V) = %.12g, required > 40", r)};
}

Outcome c3_r_on() {
    const double r = read(0.3, 300.0, params(), at(1.0)).r_ohms;
    return {std::abs(r / 1e8 - 1.0) <= 0.01, fmt("R(0.3 V, LRS) = %.8g ohm, required 1e8 +/- 1%%", r)};
}

Outcome c4_window() {
    const HysteresisModel hm = config::hysteresis_model(defaults());
    DeviceState s = at(1.0);
    const auto loop = dc_write_loop(s, loop_grid(-1.6, 2.4, 0.01), params(), 0.3, 300.0, hm);
    const double mw = memory_window(loop);
    return {hm.v_c_neg == -0.6 && std::abs(mw - 1.4) <= 0.1,
            fmt("window = %.5g V with v_c- = %.3g V, required 1.4 +/- 0.1 V", mw, hm.v_c_neg)};
}

Outcome c5_extraction() {
    double worst = 0.0;
    for (double phi : {0.1, 0.125, 0.15, 0.175, 0.2}) {
        ConductionParams p = params();
        p.phi_pf_ev = phi;
        const auto pf = sweeps([&](double v, double t) { return current_pf(v, t, p) / p.area; }, 0.2, 0.3, 0.01);
        worst = std::max(worst, std::abs(extract_pf(pf, p.d_fe).phi_pf_ev / phi - 1.0));
    }
    for (double ea : {0.1, 0.125, 0.15, 0.175, 0.2}) {
        ConductionParams p = params();
        p.ea_ohm_ev = ea;
        const auto oh = sweeps([&](double v, double t) { return current_ohmic(v, t, p) / p.area; }, 0.02, 0.1, 0.01);
        worst = std::max(worst, std::abs(extract_ohmic(oh).ea_ohm_ev / ea - 1.0));
    }
    const ConductionParams& p = params();
    const auto comp = sweeps([&](double v, double t) { return current_total(v, t, p, at(1.0)) / p.area; },
                             0.01, 0.3, 0.01);
    const CompositeExtraction ex = extract_composite(comp, p.d_fe);
    worst = std::max(worst, std::abs(ex.pf.phi_pf_ev / p.phi_pf_ev - 1.0));
    worst = std::max(worst, std::abs(ex.ohmic.ea_ohm_ev / p.ea_ohm_ev - 1.0));
    return {worst <= 0.05, fmt("worst relative barrier error = %.3g, required <= 0.05", worst)};
}

Outcome c6_tunneling() {
    const ConductionParams& p = params();
    const auto comp = sweeps([&](double v, double t) { return current_total(v, t, p, at(1.0)) / p.area; },
                             0.02, 0.3, 0.02);
    const auto sim = sweeps([&](double v, double) { return current_tunneling(v, p) / p.area; }, 0.02, 0.3, 0.02);
    const bool rej = discriminate_tunneling(comp, p).tunneling_rejected;
    const bool acc = !discriminate_tunneling(sim, p).tunneling_rejected;
    return {rej && acc, std::string("composite data ") + (rej ? "rejected" : "NOT rejected") +
                            ", Simmons data " + (acc ? "accepted" : "NOT accepted")};
}

Outcome c7_fit_a() {
    const UpdateModel m = config::update_model(defaults());
    UpdateModel quiet = m;
    quiet.c2c_rel = 0.0;
    const SchemeKind kinds[] = {SchemeKind::amplitude_ramp, SchemeKind::width_ramp, SchemeKind::hybrid};
    double worst_clean = 0.0, worst_noisy = 0.0;
    for (SchemeKind k : kinds) {
        for (auto pol : {commands::Polarity::potentiation, commands::Polarity::depression}) {
            const double a_true = pol == commands::Polarity::potentiation ? m.shape(k).a_pot : m.shape(k).a_dep;
            Rng unused(0);
            const double clean = fit_update_a(commands::update_trace(k, pol, quiet, unused)).a;
            worst_clean = std::max(worst_clean, std::abs(clean / a_true - 1.0));
            std::vector<double> est;
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                Rng rng(seed);
                est.push_back(fit_update_a(commands::update_trace(k, pol, m, rng)).a);
            }
            worst_noisy = std::max(worst_noisy, std::abs(median(est) / a_true - 1.0));
        }
    }
    return {worst_clean <= 0.005 && worst_noisy <= 0.15,
            fmt("worst noiseless error %.3g (<= 0.005), worst noisy median error %.3g (<= 0.15)", worst_clean,
                worst_noisy)};
}

Outcome c8_levels() {
    const ConductionParams& p = params();
    const UpdateModel m = config::update_model(defaults());
    const PulseScheme dep = presets::amplitude_ramp_depression();
    const PulseScheme pot = presets::amplitude_ramp_potentiation();
    const double step = dep.pulse(1).v_write - dep.pulse(0).v_write;
    const Rng root(8);
    DeviceState s = at(1.0);
    std::vector<std::vector<double>> cycles;
    for (int c = 0; c < 17; ++c) {
        Rng rng = root.split(static_cast<std::uint64_t>(c));
        std::vector<double> ws;
        for (const TracePoint& tp : run_scheme(s, dep, m, p, rng)) ws.push_back(tp.w);
        cycles.push_back(std::move(ws));
        run_scheme(s, pot, m, p, rng);
    }
    const int levels = cdf_levels(cycles).separated_levels;
    return {levels >= 10 && std::abs(step - 0.025) < 1e-12,
            fmt("%.0f separated levels over 17 cycles at %.3g V steps, required >= 10", levels, step)};
}

Outcome c9_d2d() {
    const ConductionParams& p = params();
    const Rng root(9);
    std::vector<double> lr;
    for (std::uint64_t k = 0; k < 10000; ++k) {
        lr.push_back(std::log10(read(0.3, 300.0, p, sample_device(p, 0.1, root.split(k).seed())).r_ohms));
    }
    double mean = 0.0;
    for (double v : lr) mean += v;
    mean /= static_cast<double>(lr.size());
    double ss = 0.0;
    for (double v : lr) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(lr.size() - 1));
    return {std::abs(sd - 0.1) <= 0.003, fmt("std log10 R(HRS) = %.5g, required 0.1 +/- 0.003", sd)};
}

Outcome c10_energy() {
    const double e = write_energy({-1.6, 50e-6}, DeviceState{}, params(), 300.0);
    return {e < 1e-12, fmt("E(-1.6 V, 50 us, HRS) = %.4g J, required < 1e-12 J", e)};
}

Outcome c11_solver() {
    const ConductionParams& p = params();
    double worst = 0.0, worst_kcl = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Crossbar x = build(3, 3, p, 0.1, seed);
        Rng rng(seed + 100);
        for (DeviceState& c : x.cells) c.w = rng.uniform();
        BiasScheme b = read_bias(3, 3, 1, 2, 0.5);
        b.row_drive[2] = LineDrive::voltage(0.2);
        const NetworkSolution s = solve_network(x, b);
        std::vector<double> rv, cv;
        nodal_oracle(x, b, rv, cv);
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(s.row_v[i] - rv[i]) / std::abs(rv[i]));
        for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(s.col_v[j] - cv[j]) / std::abs(cv[j]));
        worst_kcl = std::max(worst_kcl, s.kcl_residual);
    }
    const double v = 0.5;
    const NetworkSolution d = solve_network(uniform_array(2, ohmic_twin(), 1.0), read_bias(2, 2, 0, 0, v));
    const double div = std::max(std::abs(d.row_v[1] - v / 3.0), std::abs(d.col_v[1] - 2.0 * v / 3.0)) / v;
    return {worst <= 1e-9 && worst_kcl < 1e-12 && div <= 1e-9,
            fmt("oracle rel. error %.3g, KCL %.3g A, 2x2 divider rel. error %.3g", worst, worst_kcl, div)};
}

Outcome c12_sneak() {
    const ConductionParams ohm = ohmic_twin();
    double worst = std::numeric_limits<double>::infinity();
    for (int n : {3, 4, 8}) {
        const double nl = sneak_margin(uniform_array(n, params(), 1.0), 0, 0, 0.5).margin;
        const double li = sneak_margin(uniform_array(n, ohm, 1.0), 0, 0, 0.5).margin;
        worst = std::min(worst, nl / li);
    }
    return {worst >= 3.0, fmt("smallest nonlinear/Ohmic margin ratio = %.4g (3x3..8x8 LRS), required >= 3", worst)};
}

Outcome c13_retention() {
    const double drift = defaults().number("variation", "drift_rate_per_s");
    const double dt = 11.0 * 86400.0;
    bool same = true;
    for (double w : {0.0, 0.123456789, 0.5, 0.87, 1.0}) {
        const DeviceState s = at(w);
        const DeviceState e = retention_evolve(s, dt, drift);
        same = same && std::memcmp(&s.w, &e.w, sizeof(double)) == 0 && e == s;
    }
    return {same, same ? "states unchanged bit for bit after 11 days" : "state changed after 11 days"};
}

Outcome c14_mvm() {
    const ConductionParams& p = params();
    Rng rng(14);
    Eigen::MatrixXd w(8, 8), x(8, 16);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
    w /= w.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();

    const WeightMapping map = map_weights(w, 11, p);
    const double q_err = (w - map.decode()).cwiseAbs().maxCoeff();
    const bool q_ok = q_err <= 0.5 / 10.0 + 1e-12;
    const MvmErrorStats ideal = mvm_error_mc(w, x, 11, 0.0, 0.0, 3, 1, p);
    bool bound_ok = true;
    for (double e : ideal.per_trial) bound_ok = bound_ok && e <= ideal.quantization_bound;

    double med[3];
    const double sigmas[] = {0.0, 0.05, 0.1};
    for (int k = 0; k < 3; ++k) med[k] = mvm_error_mc(w, x, 11, sigmas[k], 0.0, 50, 140, p).median;
    const bool mono = med[0] <= med[1] && med[1] <= med[2];
    Outcome o{q_ok && bound_ok && mono, fmt("max weight error %.4g (<= 0.05); ", q_err)};
    o.detail += fmt("median error %.4g / %.4g / ", med[0], med[1]) + fmt("%.4g at sigma 0 / 0.05 / 0.1", med[2]);
    if (!bound_ok) o.detail += "; quantization bound violated";
    return o;
}

Outcome c15_determinism() {
    const fs::path base = fs::temp_directory_path() / "femem_acceptance_15";
    fs::remove_all(base);
    const auto a = commands::run_command("bench", defaults(), base / "a", 15);
    const auto b = commands::run_command("bench", defaults(), base / "b", 15);
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) same = slurp(a[k]) == slurp(b[k]);
    fs::remove_all(base);
    return {same, same ? "two bench runs byte identical" : "bench outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 2;
        }
    }
    const std::vector<Criterion> all = {
        {1, "ON/OFF ratio at 0.1 V", 1.0, c1_on_off},
        {2, "self-selection ratio", 1.0, c2_selection},
        {3, "LRS read resistance", 1.0, c3_r_on},
        {4, "DC memory window", 1.0, c4_window},
        {5, "barrier extraction round trip", 10.0, c5_extraction},
        {6, "tunneling discrimination", 5.0, c6_tunneling},
        {7, "update nonlinearity fit", 30.0, c7_fit_a},
        {8, "separated depression levels", 30.0, c8_levels},
        {9, "device-to-device spread", 10.0, c9_d2d},
        {10, "write energy", 1.0, c10_energy},
        {11, "crossbar network solver", 30.0, c11_solver},
        {12, "sneak margin", 10.0, c12_sneak},
        {13, "retention", 1.0, c13_retention},
        {14, "MVM properties", 60.0, c14_mvm},
        {15, "determinism", 10.0, c15_determinism},
    };
    int failures = 0, ran = 0;
    for (const Criterion& c : all) {
        if (only != 0 && c.id != only) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = dt < c.budget_s;
        const bool pass = o.ok && in_time;
        if (!pass) ++failures;
        std::printf("%s criterion %d (%s): %s; %.3f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title,
                    o.detail.c_str(), dt, c.budget_s, in_time ? "" : ", exceeded");
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
