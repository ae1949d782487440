#include "femem/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "femem/errors.hpp"

namespace femem {

std::string_view to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::amplitude_ramp: return "amplitude_ramp";
        case SchemeKind::width_ramp: return "width_ramp";
        case SchemeKind::hybrid: return "hybrid";
    }
    return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
    if (name == "amplitude_ramp") return SchemeKind::amplitude_ramp;
    if (name == "width_ramp") return SchemeKind::width_ramp;
    if (name == "hybrid") return SchemeKind::hybrid;
    throw ModelError("unknown scheme kind '" + std::string(name) + "'");
}

void PulseScheme::validate() const {
    if (n_pulses < 1) throw ModelError("scheme needs at least one pulse");
    if (!(width_start > 0.0) || !std::isfinite(width_start)) throw ModelError("pulse width must be positive");
    if (!(width_ratio >= 1.0) || !std::isfinite(width_ratio)) throw ModelError("width ratio must be >= 1");
    if (!std::isfinite(v_start) || !std::isfinite(v_step)) throw ModelError("scheme voltages must be finite");
    if (kind != SchemeKind::width_ramp && v_start * v_step < 0.0) {
        throw ModelError("amplitude ramp must grow in magnitude");
    }
}

PulseSpec PulseScheme::pulse(int k) const {
    PulseSpec p;
    const bool ramp_v = kind != SchemeKind::width_ramp;
    const bool ramp_t = kind != SchemeKind::amplitude_ramp;
    p.v_write = ramp_v ? v_start + k * v_step : v_start;
    p.t_width = ramp_t ? width_start * std::pow(width_ratio, k) : width_start;
    return p;
}

namespace presets {

PulseScheme amplitude_ramp_potentiation() {
    return {SchemeKind::amplitude_ramp, -0.6, -0.025, 50e-6, 1.0, 41};
}
PulseScheme amplitude_ramp_depression() {
    return {SchemeKind::amplitude_ramp, 0.8, 0.025, 50e-6, 1.0, 65};
}
PulseScheme width_ramp_potentiation(bool alternate_field) {
    return {SchemeKind::width_ramp, alternate_field ? -1.4 : -1.6, 0.0, 1e-6, 1.15, 50};
}
PulseScheme width_ramp_depression(bool alternate_field) {
    return {SchemeKind::width_ramp, alternate_field ? 3.2 : 2.4, 0.0, 1e-6, 1.15, 50};
}
PulseScheme hybrid_potentiation() {
    return {SchemeKind::hybrid, -0.625, -0.02, 1e-6, 1.08, 50};
}
PulseScheme hybrid_depression() {
    return {SchemeKind::hybrid, 0.825, 0.032, 1e-6, 1.08, 50};
}
PulseScheme potentiation(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::amplitude_ramp: return amplitude_ramp_potentiation();
        case SchemeKind::width_ramp: return width_ramp_potentiation();
        case SchemeKind::hybrid: return hybrid_potentiation();
    }
    return amplitude_ramp_potentiation();
}
PulseScheme depression(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::amplitude_ramp: return amplitude_ramp_depression();
        case SchemeKind::width_ramp: return width_ramp_depression();
        case SchemeKind::hybrid: return hybrid_depression();
    }
    return amplitude_ramp_depression();
}

}  // namespace presets

void UpdateModel::validate() const {
    if (n_full < 2) throw ModelError("n_full must be >= 2");
    if (!(v_on_pot < 0.0 && 0.0 < v_on_dep)) throw ModelError("onsets must satisfy v_on_pot < 0 < v_on_dep");
    if (!(c2c_rel >= 0.0 && c2c_rel < 1.0)) throw ModelError("c2c_rel must lie in [0, 1)");
    for (SchemeKind k : {SchemeKind::amplitude_ramp, SchemeKind::width_ramp, SchemeKind::hybrid}) {
        const UpdateShape& s = shape(k);
        if (!(s.a_pot > 0.0 && s.a_dep > 0.0)) throw ModelError("shape parameters must be positive");
    }
}

const UpdateShape& UpdateModel::shape(SchemeKind kind) const {
    auto it = a_table.find(kind);
    if (it == a_table.end()) {
        throw ModelError("no update shape for scheme " + std::string(to_string(kind)));
    }
    return it->second;
}

double update_curve(double n, double a, int n_full) {
    return -std::expm1(-n / a) / -std::expm1(-n_full / a);
}

double update_curve_inverse(double w, double a, int n_full) {
    w = std::clamp(w, 0.0, 1.0);
    if (w == 1.0) return n_full;
    return -a * std::log1p(w * std::expm1(-n_full / a));
}

DeviceState sample_device(const ConductionParams& p, double sigma_d2d, std::uint64_t seed) {
    validate(p);
    if (!(sigma_d2d >= 0.0)) throw ModelError("sigma_d2d must be >= 0");
    DeviceState s;
    if (sigma_d2d > 0.0) {
        Rng rng(seed);
        s.d2d_log10 = rng.normal(0.0, sigma_d2d);
    }
    return s;
}

DeviceState apply_pulse(const DeviceState& s, const PulseSpec& pulse, const UpdateModel& m,
                        Rng& rng, SchemeKind kind) {
    if (!std::isfinite(pulse.v_write) || !(pulse.t_width > 0.0)) {
        throw ModelError("pulse needs a finite amplitude and positive width");
    }
    if (s.broken) return s;

    int polarity = 0;
    if (pulse.v_write < m.v_on_pot) {
        polarity = +1;
    } else if (pulse.v_write > m.v_on_dep) {
        polarity = -1;
    } else {
        return s;
    }

    DeviceState out = s;
    if (out.last_polarity != 0 && out.last_polarity != polarity) {
        ++out.cycles;
        if (static_cast<double>(out.cycles) > kEnduranceLimitCycles) {
            out.broken = true;
            return out;
        }
    }
    out.last_polarity = static_cast<std::int8_t>(polarity);

    const UpdateShape& shape = m.shape(kind);
    const double n_full = static_cast<double>(m.n_full);
    // Potentiation walks w up its curve; depression walks 1 - w up its own.
    const double a = polarity > 0 ? shape.a_pot : shape.a_dep;
    const double pos = polarity > 0 ? s.w : 1.0 - s.w;
    const double n = update_curve_inverse(pos, a, m.n_full);
    const double step = update_curve(std::min(n + 1.0, n_full), a, m.n_full) - std::clamp(pos, 0.0, 1.0);
    const double noisy = step * rng.lognormal_unit_mean(m.c2c_rel);
    out.w = std::clamp(s.w + polarity * noisy, 0.0, 1.0);
    return out;
}

std::vector<TracePoint> run_scheme(DeviceState& s, const PulseScheme& scheme, const UpdateModel& m,
                                   const ConductionParams& p, Rng& rng, double v_read,
                                   double t_kelvin) {
    scheme.validate();
    std::vector<TracePoint> trace;
    trace.reserve(static_cast<std::size_t>(scheme.n_pulses));
    for (int k = 0; k < scheme.n_pulses; ++k) {
        const PulseSpec pulse = scheme.pulse(k);
        s = apply_pulse(s, pulse, m, rng, scheme.kind);
        trace.push_back({k, pulse, s.w, read(v_read, t_kelvin, p, s)});
    }
    return trace;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Logistic switching drive renormalized to vanish at the gate voltage.
double drive(double overdrive, double gate_overdrive, double width) {
    if (overdrive <= gate_overdrive) return 0.0;
    const double s0 = logistic(gate_overdrive / width);
    return std::clamp((logistic(overdrive / width) - s0) / (1.0 - s0), 0.0, 1.0);
}

}  // namespace

std::vector<LoopPoint> dc_write_loop(DeviceState& s, const std::vector<double>& v_grid,
                                     const ConductionParams& p, double v_read, double t_kelvin,
                                     const HysteresisModel& hm) {
    if (!(hm.v_c_neg < -hm.v_gate && hm.v_gate < hm.v_c_pos && hm.width > 0.0)) {
        throw ModelError("hysteresis needs v_c_neg < -v_gate < v_gate < v_c_pos and width > 0");
    }
    std::vector<LoopPoint> loop;
    loop.reserve(v_grid.size());
    for (double v : v_grid) {
        if (!s.broken) {
            if (v < -hm.v_gate) {
                const double up = drive(hm.v_c_neg - v, hm.v_c_neg + hm.v_gate, hm.width);
                s.w = std::max(s.w, up);
            } else if (v > hm.v_gate) {
                const double down = drive(v - hm.v_c_pos, hm.v_gate - hm.v_c_pos, hm.width);
                s.w = std::min(s.w, 1.0 - down);
            }
        }
        loop.push_back({v, s.w, read(v_read, t_kelvin, p, s)});
    }
    return loop;
}

std::vector<double> loop_grid(double v_min, double v_max, double step) {
    if (!(v_min < 0.0 && v_max > 0.0 && step > 0.0)) {
        throw ModelError("loop grid needs v_min < 0 < v_max and step > 0");
    }
    std::vector<double> grid;
    const auto up = static_cast<long>(std::llround(v_max / step));
    const auto down = static_cast<long>(std::llround(-v_min / step));
    for (long k = 0; k <= up; ++k) grid.push_back(k * step);
    for (long k = up - 1; k >= -down; --k) grid.push_back(k * step);
    for (long k = -down + 1; k <= 0; ++k) grid.push_back(k * step);
    return grid;
}

double memory_window(const std::vector<LoopPoint>& loop) {
    std::optional<double> v_set;
    std::optional<double> v_reset;
    for (std::size_t k = 1; k < loop.size(); ++k) {
        const LoopPoint& a = loop[k - 1];
        const LoopPoint& b = loop[k];
        const double x = (0.5 - a.w) / (b.w - a.w);
        const double v = a.v_write + x * (b.v_write - a.v_write);
        if (!v_set && a.w < 0.5 && b.w >= 0.5) v_set = v;
        if (!v_reset && a.w > 0.5 && b.w <= 0.5) v_reset = v;
    }
    if (!v_set || !v_reset) throw ModelError("loop does not switch in both directions");
    return *v_reset - *v_set;
}

DeviceState retention_evolve(const DeviceState& s, double dt, double drift_rate) {
    if (!(dt >= 0.0) || !(drift_rate >= 0.0)) throw ModelError("dt and drift_rate must be >= 0");
    if (dt == 0.0 || drift_rate == 0.0) return s;
    DeviceState out = s;
    out.w = 0.5 + (s.w - 0.5) * std::exp(-drift_rate * dt);
    return out;
}

DeviceState endurance_register(const DeviceState& s, std::uint64_t n_cycles) {
    DeviceState out = s;
    const auto max = std::numeric_limits<std::uint64_t>::max();
    out.cycles = (max - s.cycles < n_cycles) ? max : s.cycles + n_cycles;
    if (static_cast<double>(out.cycles) > kEnduranceLimitCycles) out.broken = true;
    return out;
}

double write_energy(const PulseSpec& pulse, const DeviceState& s, const ConductionParams& p,
                    double t_kelvin) {
    if (!(pulse.t_width >= 0.0)) throw ModelError("pulse width must be >= 0");
    if (pulse.t_width == 0.0 || pulse.v_write == 0.0) return 0.0;
    return std::abs(current_total(pulse.v_write, t_kelvin, p, s)) * std::abs(pulse.v_write) *
           pulse.t_width;
}

}  // namespace femem
