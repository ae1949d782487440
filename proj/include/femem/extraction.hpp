#pragma once

#include <span>
#include <vector>

#include "femem/conduction.hpp"

namespace femem {

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;  // 0 when n == 2
    double intercept_stderr = 0.0;
    int n = 0;
};

/// Ordinary least squares y = slope * x + intercept.
RegressionResult fit_linear(std::span<const double> xs, std::span<const double> ys);

struct SweepPoint {
    double v = 0.0;  // V
    double j = 0.0;  // A/m^2
};

struct Sweep {
    double t_kelvin = 0.0;
    std::vector<SweepPoint> points;  // sorted by v
};

using SweepSet = std::vector<Sweep>;

/// Throws ModelError unless every sweep is sorted by v and temperatures are distinct.
void validate(const SweepSet& data);

struct VoltageWindow {
    double lo = 0.0;
    double hi = 0.0;
};

inline constexpr VoltageWindow kPfWindow{0.2, 0.3};
inline constexpr VoltageWindow kOhmicWindow{0.02, 0.1};

struct PfExtraction {
    double eps_r = 0.0;
    double phi_pf_ev = 0.0;
    std::vector<double> temperatures;
    std::vector<RegressionResult> per_t;  // ln(J/V) against sqrt(V)
    RegressionResult slope_vs_inv_t;      // m(T) against 1/T
    RegressionResult intercept_arrhenius; // ln(J/V) at V -> 0 against 1/T
};

struct OhmicExtraction {
    double ea_ohm_ev = 0.0;
    std::vector<double> temperatures;
    std::vector<RegressionResult> per_t;  // ln(J/T^1.5) against ln(V)
    RegressionResult intercept_arrhenius;
};

/// Poole-Frenkel analysis: per-temperature slopes of ln(J/V) vs sqrt(V) give
/// eps_r through their 1/T dependence; the V -> 0 intercepts give phi_pf.
PfExtraction extract_pf(const SweepSet& data, double d_fe, VoltageWindow window = kPfWindow);

/// Ohmic analysis: ln(J/T^1.5) vs ln(V) must have slope 1 within
/// `max_slope_dev`; the Arrhenius slope of the intercepts gives ea_ohm.
OhmicExtraction extract_ohmic(const SweepSet& data, VoltageWindow window = kOhmicWindow,
                              double max_slope_dev = 0.05);

struct CompositeExtraction {
    PfExtraction pf;
    OhmicExtraction ohmic;
    int iterations = 0;
};

/// Two-channel separation for data carrying both mechanisms: alternately fits
/// the Ohmic window with the PF estimate subtracted and the PF window with the
/// Ohmic estimate subtracted until the per-temperature fits stop moving.
CompositeExtraction extract_composite(const SweepSet& data, double d_fe,
                                      VoltageWindow pf_window = kPfWindow,
                                      VoltageWindow ohmic_window = kOhmicWindow,
                                      int max_iterations = 500);

enum class TunnelingVerdict { rejected, not_rejected, indeterminate };

struct TunnelingDiscrimination {
    TunnelingVerdict verdict = TunnelingVerdict::indeterminate;
    bool tunneling_rejected = false;
    double t_sensitivity = 0.0;        // relative spread of J(v0, T) across T
    double simmons_sensitivity = 0.0;  // same spread for the Simmons prediction
};

/// Direct tunneling has no temperature dependence, so any spread of J(v0, T)
/// above 3x the Simmons spread (and above `noise_floor`) rejects it.
TunnelingDiscrimination discriminate_tunneling(const SweepSet& data, const ConductionParams& p,
                                               double v0 = 0.1, double noise_floor = 0.0);

struct UpdateFitPoint {
    double count = 0.0;
    double g = 0.0;
};

struct UpdateFit {
    double a = 0.0;
    double sigma0 = 0.0;
    double residual = 0.0;  // sum of squared residuals
    double a_stderr = 0.0;
    double sigma0_stderr = 0.0;
    bool near_linear = false;  // A pinned at the upper search bound
};

/// Least squares fit of g = sigma0 (1 - exp(-count / A)) with A searched on
/// [0.1, 10 max(count)] and sigma0 solved in closed form for each A.
UpdateFit fit_update_a(std::span<const UpdateFitPoint> trace);

struct PulseCdf {
    int pulse_index = 0;
    std::vector<double> sorted;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

struct CdfLevels {
    std::vector<PulseCdf> per_pulse;
    int separated_levels = 0;
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Per-pulse-index empirical CDFs over cycles. A pulse index opens a new level
/// when its median differs from the last level's median by more than the mean
/// of the two interquartile ranges.
CdfLevels cdf_levels(const std::vector<std::vector<double>>& traces);

}  // namespace femem
