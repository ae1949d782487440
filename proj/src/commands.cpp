#include "femem/commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "femem/constants.hpp"
#include "femem/crossbar.hpp"
#include "femem/csv.hpp"
#include "femem/device.hpp"
#include "femem/errors.hpp"
#include "femem/inference.hpp"

#ifndef FEMEM_VERSION
#define FEMEM_VERSION "0.0.0"
#endif

namespace femem::commands {

namespace fs = std::filesystem;
using config::Config;

std::string_view tool_version() { return FEMEM_VERSION; }

namespace {

constexpr SchemeKind kKinds[] = {SchemeKind::amplitude_ramp, SchemeKind::width_ramp, SchemeKind::hybrid};
constexpr double kTraceReadVoltage = 0.3;
constexpr double kSecondsPerDay = 86400.0;

struct Context {
    const Config& cfg;
    fs::path dir;
    std::uint64_t seed;
    std::vector<fs::path> files;

    fs::path file(std::string_view name) {
        files.push_back(dir / name);
        return files.back();
    }
    double v_read() const { return cfg.number("read", "v_read_mv") * 1e-3; }
    double t() const { return cfg.number("read", "t_kelvin"); }
    double sigma_d2d() const { return cfg.number("variation", "sigma_d2d_log10"); }
};

std::vector<double> linear_grid(double start, double stop, double step) {
    const double span = stop - start;
    const auto n = static_cast<long>(std::floor(std::abs(span) / step + 1e-9));
    const double dir = span < 0.0 ? -1.0 : 1.0;
    std::vector<double> out;
    for (long k = 0; k <= n; ++k) out.push_back(start + dir * static_cast<double>(k) * step);
    return out;
}

DeviceState at_state(double w) {
    DeviceState s;
    s.w = w;
    return s;
}

void write_summary(Context& ctx, std::string_view name,
                   const std::vector<std::pair<std::string, double>>& rows) {
    CsvWriter w(ctx.file(name), {"quantity", "value"});
    for (const auto& [k, v] : rows) {
        w.cell(std::string_view(k)).cell(v);
        w.end_row();
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

double stddev_of(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (n - 1.0));
}

void cmd_iv(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const auto grid = linear_grid(ctx.cfg.number("iv", "v_start_mv") * 1e-3, ctx.cfg.number("iv", "v_stop_mv") * 1e-3,
                                  ctx.cfg.number("iv", "v_step_mv") * 1e-3);
    CsvWriter w(ctx.file("iv.csv"), {"v_volts", "t_kelvin", "state_w", "i_amps", "j_a_per_m2"});
    for (double t : ctx.cfg.list("iv", "temperatures_kelvin")) {
        for (double sw : ctx.cfg.list("iv", "states_w")) {
            for (double v : grid) {
                const double i = current_total(v, t, p, at_state(sw));
                w.cell(v).cell(t).cell(sw).cell(i).cell(i / p.area);
                w.end_row();
            }
        }
    }
}

void cmd_hysteresis(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const HysteresisModel hm = config::hysteresis_model(ctx.cfg);
    const auto grid = loop_grid(ctx.cfg.number("hysteresis", "v_min_mv") * 1e-3,
                                ctx.cfg.number("hysteresis", "v_max_mv") * 1e-3,
                                ctx.cfg.number("hysteresis", "v_step_mv") * 1e-3);
    DeviceState s = at_state(1.0);
    const auto loop = dc_write_loop(s, grid, p, ctx.v_read(), ctx.t(), hm);
    CsvWriter w(ctx.file("loop.csv"), {"step", "v_write_volts", "w", "i_read_amps", "r_read_ohms"});
    for (std::size_t k = 0; k < loop.size(); ++k) {
        w.cell(static_cast<long long>(k)).cell(loop[k].v_write).cell(loop[k].w).cell(loop[k].readout.i_amps);
        w.cell(loop[k].readout.r_ohms);
        w.end_row();
    }
    write_summary(ctx, "summary.csv", {{"memory_window_volts", memory_window(loop)}, {"v_read_volts", ctx.v_read()}});
}

PulseScheme pot_scheme(SchemeKind kind, bool alternate) {
    return kind == SchemeKind::width_ramp ? presets::width_ramp_potentiation(alternate) : presets::potentiation(kind);
}
PulseScheme dep_scheme(SchemeKind kind, bool alternate) {
    return kind == SchemeKind::width_ramp ? presets::width_ramp_depression(alternate) : presets::depression(kind);
}

// Full potentiation/depression cycles from a pristine sampled device.
std::vector<std::vector<TracePoint>> cycle_traces(Context& ctx, SchemeKind kind, bool alternate, int cycles,
                                                  Polarity which, bool both) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const UpdateModel m = config::update_model(ctx.cfg);
    const Rng root(ctx.seed);
    DeviceState s = sample_device(p, ctx.sigma_d2d(), root.split(0).seed());
    std::vector<std::vector<TracePoint>> out;
    for (int c = 0; c < cycles; ++c) {
        Rng rng = root.split(1 + static_cast<std::uint64_t>(c));
        auto pot = run_scheme(s, pot_scheme(kind, alternate), m, p, rng, kTraceReadVoltage, ctx.t());
        auto dep = run_scheme(s, dep_scheme(kind, alternate), m, p, rng, kTraceReadVoltage, ctx.t());
        if (both) {
            pot.insert(pot.end(), dep.begin(), dep.end());
            out.push_back(std::move(pot));
        } else {
            out.push_back(which == Polarity::potentiation ? std::move(pot) : std::move(dep));
        }
    }
    return out;
}

void cmd_scheme(Context& ctx) {
    const SchemeKind kind = parse_scheme_kind(ctx.cfg.text("scheme", "kind"));
    const auto traces = cycle_traces(ctx, kind, ctx.cfg.flag("scheme", "alternate_field"),
                                     static_cast<int>(ctx.cfg.integer("scheme", "cycles")), Polarity::potentiation,
                                     true);
    CsvWriter w(ctx.file("trace.csv"), {"cycle", "pulse_index", "v_write_volts", "t_width_s", "w", "r_ohms_0p3v"});
    for (std::size_t c = 0; c < traces.size(); ++c) {
        for (std::size_t k = 0; k < traces[c].size(); ++k) {
            const TracePoint& tp = traces[c][k];
            w.cell(static_cast<long long>(c)).cell(static_cast<long long>(k)).cell(tp.pulse.v_write);
            w.cell(tp.pulse.t_width).cell(tp.w).cell(tp.readout.r_ohms);
            w.end_row();
        }
    }
}

std::string a_name(Polarity pol, SchemeKind kind) {
    return std::string(pol == Polarity::potentiation ? "a_pot_" : "a_dep_") + std::string(to_string(kind)) +
           "_pulses";
}

void cmd_fit_a(Context& ctx) {
    UpdateModel m = config::update_model(ctx.cfg);
    const auto repeats = static_cast<int>(ctx.cfg.integer("fitA", "noisy_repeats"));
    CsvWriter w(ctx.file("fit.csv"), {"param", "value", "stderr"});
    const Rng root(ctx.seed);
    std::uint64_t stream = 0;
    for (SchemeKind kind : kKinds) {
        for (Polarity pol : {Polarity::potentiation, Polarity::depression}) {
            UpdateModel quiet = m;
            quiet.c2c_rel = 0.0;
            Rng rng = root.split(stream++);
            const UpdateFit exact = fit_update_a(update_trace(kind, pol, quiet, rng));
            const std::string name = a_name(pol, kind);
            w.cell(std::string_view(name)).cell(exact.a).cell(exact.a_stderr);
            w.end_row();
            if (repeats < 1) continue;
            std::vector<double> noisy;
            for (int r = 0; r < repeats; ++r) {
                Rng nr = rng.split(static_cast<std::uint64_t>(r));
                noisy.push_back(fit_update_a(update_trace(kind, pol, m, nr)).a);
            }
            const double se = repeats > 1 ? 1.2533 * stddev_of(noisy) / std::sqrt(static_cast<double>(repeats)) : 0.0;
            const std::string noisy_name = name.substr(0, name.size() - 7) + "_noisy_median_pulses";
            w.cell(std::string_view(noisy_name)).cell(median_of(noisy)).cell(se);
            w.end_row();
        }
    }
}

void cmd_cdf(Context& ctx) {
    const SchemeKind kind = parse_scheme_kind(ctx.cfg.text("cdf", "kind"));
    const std::string& pol_name = ctx.cfg.text("cdf", "polarity");
    Polarity pol;
    if (pol_name == "potentiation") {
        pol = Polarity::potentiation;
    } else if (pol_name == "depression") {
        pol = Polarity::depression;
    } else {
        throw config::ConfigError("[cdf] polarity must be potentiation or depression");
    }
    const auto traces =
        cycle_traces(ctx, kind, false, static_cast<int>(ctx.cfg.integer("cdf", "cycles")), pol, false);
    std::vector<std::vector<double>> ws;
    for (const auto& tr : traces) {
        std::vector<double> row;
        for (const TracePoint& tp : tr) row.push_back(tp.w);
        ws.push_back(std::move(row));
    }
    const CdfLevels levels = cdf_levels(ws);
    {
        CsvWriter w(ctx.file("cdf.csv"), {"pulse_index", "rank", "w", "probability"});
        for (const PulseCdf& pc : levels.per_pulse) {
            const auto n = static_cast<double>(pc.sorted.size());
            for (std::size_t r = 0; r < pc.sorted.size(); ++r) {
                w.cell(pc.pulse_index).cell(static_cast<long long>(r)).cell(pc.sorted[r]);
                w.cell((static_cast<double>(r) + 1.0) / n);
                w.end_row();
            }
        }
    }
    {
        CsvWriter w(ctx.file("quartiles.csv"), {"pulse_index", "q25_w", "q50_w", "q75_w"});
        for (const PulseCdf& pc : levels.per_pulse) {
            w.cell(pc.pulse_index).cell(pc.q25).cell(pc.q50).cell(pc.q75);
            w.end_row();
        }
    }
    write_summary(ctx, "summary.csv", {{"separated_levels", static_cast<double>(levels.separated_levels)}});
}

void cmd_retention(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const double duration = ctx.cfg.number("retention", "duration_days") * kSecondsPerDay;
    const auto samples = ctx.cfg.integer("retention", "samples");
    const double drift = ctx.cfg.number("variation", "drift_rate_per_s");
    CsvWriter w(ctx.file("retention.csv"), {"t_seconds", "initial_w", "w", "r_read_ohms"});
    for (double w0 : ctx.cfg.list("retention", "states_w")) {
        const DeviceState s0 = at_state(w0);
        for (long long k = 0; k < samples; ++k) {
            const double t = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
            const DeviceState s = retention_evolve(s0, t, drift);
            w.cell(t).cell(w0).cell(s.w).cell(read(ctx.v_read(), ctx.t(), p, s).r_ohms);
            w.end_row();
        }
    }
}

void cmd_d2d(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const auto n = ctx.cfg.integer("d2d", "devices");
    const Rng root(ctx.seed);
    std::vector<double> hrs, lrs;
    CsvWriter w(ctx.file("d2d.csv"), {"device", "log10_r_hrs_ohms", "log10_r_lrs_ohms"});
    for (long long k = 0; k < n; ++k) {
        DeviceState s = sample_device(p, ctx.sigma_d2d(), root.split(static_cast<std::uint64_t>(k)).seed());
        const double h = std::log10(read(ctx.v_read(), ctx.t(), p, s).r_ohms);
        s.w = 1.0;
        const double l = std::log10(read(ctx.v_read(), ctx.t(), p, s).r_ohms);
        hrs.push_back(h);
        lrs.push_back(l);
        w.cell(k).cell(h).cell(l);
        w.end_row();
    }
    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    write_summary(ctx, "summary.csv",
                  {{"mean_log10_r_hrs_ohms", mean(hrs)},
                   {"std_log10_r_hrs", stddev_of(hrs)},
                   {"mean_log10_r_lrs_ohms", mean(lrs)},
                   {"std_log10_r_lrs", stddev_of(lrs)}});
}

void cmd_scaling(Context& ctx) {
    const ConductionParams base = config::conduction_params(ctx.cfg);
    const auto grid = linear_grid(ctx.cfg.number("scaling", "v_start_mv") * 1e-3,
                                  ctx.cfg.number("scaling", "v_stop_mv") * 1e-3,
                                  ctx.cfg.number("scaling", "v_step_mv") * 1e-3);
    const auto& areas = ctx.cfg.list("scaling", "areas_um2");
    std::vector<double> j_ref;
    double spread = 0.0;
    CsvWriter w(ctx.file("scaling.csv"), {"area_m2", "v_volts", "i_amps", "j_a_per_m2"});
    for (double a_um2 : areas) {
        ConductionParams p = base;
        p.area = a_um2 * 1e-12;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double i = current_total(grid[k], ctx.t(), p, at_state(1.0));
            const double j = i / p.area;
            if (j_ref.size() < grid.size()) {
                j_ref.push_back(j);
            } else if (j_ref[k] != 0.0) {
                spread = std::max(spread, std::abs(j / j_ref[k] - 1.0));
            }
            w.cell(p.area).cell(grid[k]).cell(i).cell(j);
            w.end_row();
        }
    }
    write_summary(ctx, "summary.csv", {{"max_relative_j_spread", spread}});
}

void cmd_arrhenius(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    SweepSet data;
    const std::string& input = ctx.cfg.text("arrhenius", "input_csv");
    if (!input.empty()) {
        data = read_sweeps_csv(input);
    } else {
        const auto grid = linear_grid(ctx.cfg.number("arrhenius", "v_step_mv") * 1e-3,
                                      ctx.cfg.number("arrhenius", "v_stop_mv") * 1e-3,
                                      ctx.cfg.number("arrhenius", "v_step_mv") * 1e-3);
        const DeviceState s = at_state(ctx.cfg.number("arrhenius", "state_w"));
        for (double t : ctx.cfg.list("arrhenius", "temperatures_kelvin")) {
            Sweep sw{t, {}};
            for (double v : grid) sw.points.push_back({v, current_total(v, t, p, s) / p.area});
            data.push_back(std::move(sw));
        }
    }
    write_sweeps_csv(ctx.file("sweeps.csv"), data);

    const CompositeExtraction ex = extract_composite(data, p.d_fe);
    const TunnelingDiscrimination td = discriminate_tunneling(data, p);
    {
        CsvWriter w(ctx.file("arrhenius.csv"),
                    {"t_kelvin", "inv_t_per_kelvin", "pf_slope_per_sqrt_volt", "pf_ln_j_over_v_intercept",
                     "ohmic_ln_j_over_t1p5_intercept", "ohmic_log_slope"});
        for (std::size_t k = 0; k < data.size(); ++k) {
            w.cell(data[k].t_kelvin).cell(1.0 / data[k].t_kelvin).cell(ex.pf.per_t[k].slope);
            w.cell(ex.pf.per_t[k].intercept).cell(ex.ohmic.per_t[k].intercept).cell(ex.ohmic.per_t[k].slope);
            w.end_row();
        }
    }
    const double to_ev = constants::k_b / constants::q;
    const double eps_se = 2.0 * ex.pf.eps_r * ex.pf.slope_vs_inv_t.slope_stderr / ex.pf.slope_vs_inv_t.slope;
    CsvWriter w(ctx.file("fit.csv"), {"param", "value", "stderr"});
    w.cell("eps_r").cell(ex.pf.eps_r).cell(std::abs(eps_se));
    w.end_row();
    w.cell("phi_pf_ev").cell(ex.pf.phi_pf_ev).cell(ex.pf.intercept_arrhenius.slope_stderr * to_ev);
    w.end_row();
    w.cell("ea_ohm_ev").cell(ex.ohmic.ea_ohm_ev).cell(ex.ohmic.intercept_arrhenius.slope_stderr * to_ev);
    w.end_row();
    w.cell("tunneling_t_sensitivity").cell(td.t_sensitivity).cell(0.0);
    w.end_row();
    w.cell("tunneling_rejected").cell(td.tunneling_rejected ? 1.0 : 0.0).cell(0.0);
    w.end_row();
}

ConductionParams ohmic_twin(const Config& cfg) {
    CalibrationTargets tg = config::calibration_targets(cfg);
    tg.selection_ratio = 2.0;
    ConductionParams p = config::conduction_params(cfg);
    return calibrate(tg, p);
}

void cmd_xbar(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const ConductionParams ohm = ohmic_twin(ctx.cfg);
    const UpdateModel m = config::update_model(ctx.cfg);
    const double v_read = ctx.cfg.number("xbar", "v_read_mv") * 1e-3;
    const PulseSpec write{ctx.cfg.number("xbar", "write_v_mv") * 1e-3, ctx.cfg.number("xbar", "write_width_us") * 1e-6};
    CsvWriter w(ctx.file("xbar.csv"), {"size", "model", "i_selected_amps", "i_sneak_worst_amps", "margin",
                                       "disturbed_cells", "write_energy_j"});
    const Rng root(ctx.seed);
    for (double size_d : ctx.cfg.list("xbar", "sizes")) {
        const int n = static_cast<int>(size_d);
        for (const auto& [label, params] : {std::pair<const char*, ConductionParams>{"nonlinear", p}, {"ohmic", ohm}}) {
            Crossbar x = build(n, n, params, 0.0, 0, ctx.t());
            for (DeviceState& s : x.cells) s.w = 1.0;
            const int c = n / 2;
            x.cell(c, c).w = 0.0;  // HRS victim among LRS neighbours
            const SneakMargin sm = sneak_margin(x, c, c, v_read);
            Rng rng = root.split(static_cast<std::uint64_t>(n));
            const WriteReport rep = write_v_half(x, c, c, write, m, rng);
            w.cell(n).cell(label).cell(sm.i_selected).cell(sm.i_sneak_worst).cell(sm.margin);
            w.cell(rep.disturbed_cells).cell(rep.energy);
            w.end_row();
        }
    }
}

void cmd_mvm(Context& ctx) {
    const ConductionParams p = config::conduction_params(ctx.cfg);
    const UpdateModel m = config::update_model(ctx.cfg);
    Rng rng = Rng(ctx.seed).split(0);
    Eigen::MatrixXd w_mat, x_mat;
    const std::string& wpath = ctx.cfg.text("mvm", "weights_csv");
    const std::string& xpath = ctx.cfg.text("mvm", "inputs_csv");
    if (!wpath.empty()) {
        w_mat = read_matrix_csv(wpath);
    } else {
        w_mat.resize(ctx.cfg.integer("mvm", "outputs"), ctx.cfg.integer("mvm", "inputs"));
        for (Eigen::Index k = 0; k < w_mat.size(); ++k) w_mat.data()[k] = rng.normal();
        w_mat /= w_mat.cwiseAbs().maxCoeff();
    }
    if (!xpath.empty()) {
        x_mat = read_matrix_csv(xpath);
    } else {
        x_mat.resize(w_mat.cols(), ctx.cfg.integer("mvm", "vectors"));
        for (Eigen::Index k = 0; k < x_mat.size(); ++k) x_mat.data()[k] = rng.normal();
    }
    write_matrix_csv(ctx.file("weights.csv"), w_mat);
    write_matrix_csv(ctx.file("inputs.csv"), x_mat);
    const auto lv = ctx.cfg.integer("mvm", "levels");
    const std::optional<int> levels = lv > 0 ? std::optional<int>(static_cast<int>(lv)) : std::nullopt;
    const MvmErrorStats st = mvm_error_mc(w_mat, x_mat, levels, ctx.sigma_d2d(), m.c2c_rel,
                                          static_cast<int>(ctx.cfg.integer("mvm", "trials")), ctx.seed + 1, p);
    CsvWriter w(ctx.file("mvm.csv"), {"trial", "relative_rms_error"});
    for (std::size_t k = 0; k < st.per_trial.size(); ++k) {
        w.cell(static_cast<long long>(k)).cell(st.per_trial[k]);
        w.end_row();
    }
    write_summary(ctx, "summary.csv",
                  {{"median_relative_rms_error", st.median},
                   {"mean_relative_rms_error", st.mean},
                   {"median_ci95_low", st.ci_low},
                   {"median_ci95_high", st.ci_high},
                   {"quantization_bound", st.quantization_bound}});
}

void cmd_bench(Context& ctx) {
    const BenchSummary b = bench_summary(ctx.cfg, ctx.seed);
    CsvWriter w(ctx.file("bench.csv"),
                {"on_off_0p1v", "r_on_ohms_0p3v", "selection_ratio_0p5v", "a_pot_amplitude_ramp_pulses",
                 "a_dep_amplitude_ramp_pulses", "a_pot_width_ramp_pulses", "a_dep_width_ramp_pulses",
                 "a_pot_hybrid_pulses", "a_dep_hybrid_pulses", "c2c_percent", "write_energy_j",
                 "memory_window_volts"});
    w.cell(b.on_off).cell(b.r_on_ohms).cell(b.selection_ratio);
    for (int k = 0; k < 3; ++k) w.cell(b.a_pot[k]).cell(b.a_dep[k]);
    w.cell(b.c2c_percent).cell(b.write_energy_j).cell(b.memory_window_v);
    w.end_row();
}

using Handler = void (*)(Context&);

const std::vector<std::pair<std::string_view, Handler>>& table() {
    static const std::vector<std::pair<std::string_view, Handler>> t = {
        {"iv", cmd_iv},         {"hysteresis", cmd_hysteresis}, {"scheme", cmd_scheme}, {"fitA", cmd_fit_a},
        {"cdf", cmd_cdf},       {"retention", cmd_retention},   {"d2d", cmd_d2d},       {"scaling", cmd_scaling},
        {"arrhenius", cmd_arrhenius}, {"xbar", cmd_xbar},       {"mvm", cmd_mvm},       {"bench", cmd_bench},
    };
    return t;
}

}  // namespace

const std::vector<std::string_view>& command_names() {
    static const std::vector<std::string_view> names = [] {
        std::vector<std::string_view> n;
        for (const auto& [name, h] : table()) n.push_back(name);
        return n;
    }();
    return names;
}

std::vector<UpdateFitPoint> update_trace(SchemeKind kind, Polarity pol, const UpdateModel& m, Rng& rng) {
    const PulseScheme scheme = pol == Polarity::potentiation ? presets::potentiation(kind) : presets::depression(kind);
    DeviceState s = at_state(pol == Polarity::potentiation ? 0.0 : 1.0);
    std::vector<UpdateFitPoint> out;
    int count = 0;
    for (int k = 0; k < scheme.n_pulses && count < m.n_full; ++k) {
        const PulseSpec pulse = scheme.pulse(k);
        const bool effective = pol == Polarity::potentiation ? pulse.v_write < m.v_on_pot : pulse.v_write > m.v_on_dep;
        s = apply_pulse(s, pulse, m, rng, kind);
        if (!effective) continue;
        ++count;
        out.push_back({static_cast<double>(count), pol == Polarity::potentiation ? s.w : 1.0 - s.w});
    }
    return out;
}

BenchSummary bench_summary(const Config& cfg, std::uint64_t seed) {
    const ConductionParams p = config::conduction_params(cfg);
    const UpdateModel m = config::update_model(cfg);
    const double t = cfg.number("read", "t_kelvin");
    BenchSummary b;
    b.on_off = on_off(p, t, 0.1);
    b.r_on_ohms = read(0.3, t, p, at_state(1.0)).r_ohms;
    b.selection_ratio = self_selection_ratio(0.5, t, p, at_state(1.0));

    UpdateModel quiet = m;
    quiet.c2c_rel = 0.0;
    Rng unused(0);
    for (int k = 0; k < 3; ++k) {
        b.a_pot[k] = fit_update_a(update_trace(kKinds[k], Polarity::potentiation, quiet, unused)).a;
        b.a_dep[k] = fit_update_a(update_trace(kKinds[k], Polarity::depression, quiet, unused)).a;
    }

    // Relative spread of repeated single steps from the same state.
    const auto repeats = cfg.integer("bench", "c2c_repeats");
    Rng rng = Rng(seed).split(0);
    const PulseSpec pulse{-1.6, 50e-6};
    const DeviceState mid = at_state(0.5);
    const double nominal = apply_pulse(mid, pulse, quiet, unused).w - mid.w;
    std::vector<double> steps;
    for (long long r = 0; r < repeats; ++r) steps.push_back((apply_pulse(mid, pulse, m, rng).w - mid.w) / nominal);
    b.c2c_percent = 100.0 * stddev_of(steps);

    b.write_energy_j = write_energy(pulse, DeviceState{}, p, t);
    const HysteresisModel hm = config::hysteresis_model(cfg);
    DeviceState s = at_state(1.0);
    const auto loop = dc_write_loop(s,
                                    loop_grid(cfg.number("hysteresis", "v_min_mv") * 1e-3,
                                              cfg.number("hysteresis", "v_max_mv") * 1e-3,
                                              cfg.number("hysteresis", "v_step_mv") * 1e-3),
                                    p, cfg.number("read", "v_read_mv") * 1e-3, t, hm);
    b.memory_window_v = memory_window(loop);
    return b;
}

std::vector<fs::path> run_command(std::string_view name, const Config& cfg, const fs::path& out_dir,
                                  std::uint64_t seed) {
    const auto& t = table();
    auto it = std::find_if(t.begin(), t.end(), [&](const auto& e) { return e.first == name; });
    if (it == t.end()) throw UnknownCommand("unknown command '" + std::string(name) + "'");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

    Context ctx{cfg, out_dir, seed, {}};
    it->second(ctx);

    nlohmann::json meta;
    meta["command"] = std::string(name);
    meta["seed"] = seed;
    meta["config_hash"] = config::config_hash(cfg);
    meta["tool_version"] = std::string(tool_version());
    nlohmann::json files = nlohmann::json::array();
    for (const fs::path& f : ctx.files) files.push_back(f.filename().string());
    meta["files"] = files;
    const fs::path meta_path = out_dir / (std::string(name) + ".meta.json");
    std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + meta_path.string());
    out << meta.dump(2) << '\n';
    ctx.files.push_back(meta_path);
    return ctx.files;
}

}  // namespace femem::commands
