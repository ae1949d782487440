#pragma once

#include "femem/state.hpp"

namespace femem {

struct TunnelingParams {
    double phi_bar_ev = 1.0;  // mean barrier height
    double m_eff = 0.3;       // effective-mass ratio

    friend bool operator==(const TunnelingParams&, const TunnelingParams&) = default;
};

/// Junction conduction parameters. Barriers are in eV, everything else SI.
struct ConductionParams {
    double d_fe = 4.9e-9;         // m
    double area = 14400e-12;      // m^2
    double phi_pf_ev = 0.15;      // Poole-Frenkel trap barrier
    double eps_r = 6.8;           // dynamic relative permittivity
    double ea_ohm_ev = 0.15;      // Ohmic activation energy
    double c_pf = 1.4e-11;        // A m^-2 (V/m)^-1; 0 disables the PF channel
    double c_ohm = 3.6e-12;       // A m^-2 (V/m)^-1 K^-3/2
    TunnelingParams tun;
    double g_lrs = 10.0;          // LRS/HRS conductance ratio

    friend bool operator==(const ConductionParams&, const ConductionParams&) = default;
};

/// Throws ModelError when an invariant of `p` is violated.
void validate(const ConductionParams& p);

/// State multiplier g(w) = g_lrs^w * 10^(-d2d_log10), shared by both channels.
double state_multiplier(const ConductionParams& p, const DeviceState& s);

// Single-channel currents for v >= 0, scaled by the state multiplier g.
double current_ohmic(double v, double t_kelvin, const ConductionParams& p, double g = 1.0);
double current_pf(double v, double t_kelvin, const ConductionParams& p, double g = 1.0);

/// Closed-form slope of ln(J_pf/V) against sqrt(V) at temperature t.
double pf_slope(double t_kelvin, const ConductionParams& p);

/// Simmons direct tunneling through the mean barrier; odd in v and
/// temperature independent. Throws ModelError when |v| >= phi_bar.
double current_tunneling(double v, const ConductionParams& p);

/// Composite Ohmic + PF current with I(-v) = -I(v).
double current_total(double v, double t_kelvin, const ConductionParams& p, const DeviceState& s);

/// dI/dV of current_total; even in v.
double conductance_total(double v, double t_kelvin, const ConductionParams& p,
                         const DeviceState& s);

struct Readout {
    double v_read = 0.0;
    double t_kelvin = 0.0;
    double i_amps = 0.0;
    double r_ohms = 0.0;
    double j_a_per_m2 = 0.0;
};

Readout read(double v_read, double t_kelvin, const ConductionParams& p, const DeviceState& s);

/// I(v_read, LRS) / I(v_read, HRS).
double on_off(const ConductionParams& p, double t_kelvin, double v_read);

/// I(v) / I(v/2).
double self_selection_ratio(double v, double t_kelvin, const ConductionParams& p,
                            const DeviceState& s);

struct CalibrationTargets {
    double r_on_ohms = 100e6;       // LRS read resistance at v_r_on
    double on_off = 10.0;           // at v_on_off
    double selection_ratio = 40.0;  // I(v_sel)/I(v_sel/2) in LRS
    double v_r_on = 0.3;
    double v_on_off = 0.1;
    double v_selection = 0.5;
    double v_crossover = 0.2;       // Ohmic and PF channel currents are equal here
    double t_kelvin = 300.0;
};

/// Solves c_ohm, c_pf, g_lrs and eps_r of `skeleton` so that the composite
/// model meets `targets` to 1 %. Throws InfeasibleError with the residuals.
ConductionParams calibrate(const CalibrationTargets& targets, const ConductionParams& skeleton);

/// The calibrated device used throughout (100 MOhm, ON/OFF 10, selection 40).
const ConductionParams& default_params();

}  // namespace femem
