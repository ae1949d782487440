#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "femem/conduction.hpp"
#include "femem/rng.hpp"
#include "femem/state.hpp"

namespace femem {

inline constexpr double kEnduranceLimitCycles = 1e10;

struct PulseSpec {
    double v_write = 0.0;  // V, signed
    double t_width = 0.0;  // s
};

enum class SchemeKind { amplitude_ramp, width_ramp, hybrid };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(std::string_view name);

/// A programmed pulse train.
///
/// amplitude_ramp: v_start + k*v_step at constant width_start.
/// width_ramp:     constant v_start, width_start * width_ratio^k.
/// hybrid:         both ramps at once.
struct PulseScheme {
    SchemeKind kind = SchemeKind::amplitude_ramp;
    double v_start = 0.0;
    double v_step = 0.0;
    double width_start = 50e-6;
    double width_ratio = 1.0;
    int n_pulses = 1;

    void validate() const;
    PulseSpec pulse(int k) const;
};

namespace presets {
// Constant 50 us width, 25 mV steps from the onsets to the benchmark amplitudes.
PulseScheme amplitude_ramp_potentiation();  // -0.6 V .. -1.6 V
PulseScheme amplitude_ramp_depression();    // +0.8 V .. +2.4 V
// Constant field with growing width (1 us x 1.15^k, 50 pulses).
PulseScheme width_ramp_potentiation(bool alternate_field = false);  // -1.6 V (alt -1.4 V)
PulseScheme width_ramp_depression(bool alternate_field = false);    // +2.4 V (alt +3.2 V)
PulseScheme hybrid_potentiation();
PulseScheme hybrid_depression();
PulseScheme potentiation(SchemeKind kind);
PulseScheme depression(SchemeKind kind);
}  // namespace presets

/// Saturating-exponential shape parameters (in pulse counts) for one scheme.
struct UpdateShape {
    double a_pot = 25.0;
    double a_dep = 8.0;
    friend bool operator==(const UpdateShape&, const UpdateShape&) = default;
};

struct UpdateModel {
    std::map<SchemeKind, UpdateShape> a_table{
        {SchemeKind::amplitude_ramp, {25.0, 8.0}},
        {SchemeKind::width_ramp, {8.0, 25.0}},
        {SchemeKind::hybrid, {15.0, 15.0}},
    };
    int n_full = 50;
    double v_on_pot = -0.6;
    double v_on_dep = 0.8;
    double c2c_rel = 0.10;

    void validate() const;
    const UpdateShape& shape(SchemeKind kind) const;
    friend bool operator==(const UpdateModel&, const UpdateModel&) = default;
};

/// Normalized position on the saturating curve after n pulses:
/// (1 - e^{-n/a}) / (1 - e^{-n_full/a}), so curve(0) = 0 and curve(n_full) = 1.
double update_curve(double n, double a, int n_full);

/// Pulse count that reaches `w` on the curve (w clamped to [0, 1]).
double update_curve_inverse(double w, double a, int n_full);

/// Quasi-static hysteron for DC write loops.
struct HysteresisModel {
    double v_c_neg = -0.6;  // SET coercive voltage
    double v_c_pos = 0.8;   // RESET coercive voltage
    double width = 0.1;     // logistic transition width, V
    double v_gate = 0.3;    // no switching for |v| <= v_gate (read window)
};

/// Pristine HRS device with d2d_log10 ~ Normal(0, sigma_d2d) from `seed`.
DeviceState sample_device(const ConductionParams& p, double sigma_d2d, std::uint64_t seed);

/// One write pulse. Potentiation below v_on_pot, depression above v_on_dep,
/// otherwise unchanged. Each effective pulse advances one count along the
/// curve of `kind`, scaled by lognormal cycle-to-cycle noise.
DeviceState apply_pulse(const DeviceState& s, const PulseSpec& pulse, const UpdateModel& m,
                        Rng& rng, SchemeKind kind = SchemeKind::amplitude_ramp);

struct TracePoint {
    int pulse_index = 0;
    PulseSpec pulse;
    double w = 0.0;
    Readout readout;
};

std::vector<TracePoint> run_scheme(DeviceState& s, const PulseScheme& scheme, const UpdateModel& m,
                                   const ConductionParams& p, Rng& rng, double v_read = 0.3,
                                   double t_kelvin = 300.0);

struct LoopPoint {
    double v_write = 0.0;
    double w = 0.0;
    Readout readout;
};

std::vector<LoopPoint> dc_write_loop(DeviceState& s, const std::vector<double>& v_grid,
                                     const ConductionParams& p, double v_read = 0.3,
                                     double t_kelvin = 300.0, const HysteresisModel& hm = {});

/// Sweep 0 -> v_max -> v_min -> 0 in steps of `step`.
std::vector<double> loop_grid(double v_min, double v_max, double step);

/// Separation between the voltages where a loop crosses w = 0.5 going up
/// (SET, negative side) and going down (RESET, positive side).
double memory_window(const std::vector<LoopPoint>& loop);

/// Exponential relaxation of w toward 0.5; identity when drift_rate or dt is 0.
DeviceState retention_evolve(const DeviceState& s, double dt, double drift_rate = 0.0);

DeviceState endurance_register(const DeviceState& s, std::uint64_t n_cycles);

/// Rectangular-pulse energy |I(v)| |v| t_width.
double write_energy(const PulseSpec& pulse, const DeviceState& s, const ConductionParams& p,
                    double t_kelvin = 300.0);

}  // namespace femem
