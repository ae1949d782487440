#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "femem/conduction.hpp"
#include "femem/crossbar.hpp"
#include "femem/device.hpp"
#include "femem/rng.hpp"

namespace femem {

inline constexpr double kInferenceReadVoltage = 0.1;

/// Differential-pair encoding of a signed weight matrix.
///
/// Weights are stored transposed so that crossbar row i carries input i and
/// column j produces output j: cell (i, j) holds W(j, i). A weight w maps to
/// g+ = g_min + max(w, 0) (g_max - g_min) and g- = g_min + max(-w, 0) (g_max - g_min),
/// quantized to `levels` equally spaced conductances (nullopt: continuous).
struct WeightMapping {
    std::optional<int> levels;
    double g_min = 0.0;  // S at v_read
    double g_max = 0.0;
    double v_read = kInferenceReadVoltage;
    Eigen::MatrixXd g_pos;  // inputs x outputs
    Eigen::MatrixXd g_neg;

    /// Weights represented by the stored pair, outputs x inputs.
    Eigen::MatrixXd decode() const;
    /// Largest |w - decode(map(w))| guaranteed by the level grid.
    double quantization_step_bound() const;
};

WeightMapping map_weights(const Eigen::MatrixXd& w, std::optional<int> levels,
                          const ConductionParams& p, double v_read = kInferenceReadVoltage,
                          double t_kelvin = 300.0);

struct WriteVerifyOptions {
    double v_read = kInferenceReadVoltage;
    PulseSpec potentiation{-1.6, 50e-6};
    PulseSpec depression{2.4, 50e-6};
    SchemeKind kind = SchemeKind::amplitude_ramp;
};

struct WriteVerifyResult {
    Crossbar array;
    Eigen::MatrixXi pulses;       // per-cell pulse counts
    Eigen::MatrixXd residuals;    // g - target, S
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> converged;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> unreachable;
};

/// Read, pick a polarity, apply one pulse; repeat per cell until
/// |g - target| <= tol * (g_max - g_min) of that device or max_pulses.
/// Targets outside a device's reachable range are flagged and driven to the
/// nearest bound.
WriteVerifyResult program_write_verify(const Crossbar& x, const Eigen::MatrixXd& targets,
                                       const UpdateModel& m, double tol, int max_pulses, Rng& rng,
                                       const WriteVerifyOptions& opt = {});

/// Normalized state reaching conductance g on a nominal (d2d-free) device.
double state_for_conductance(double g, const ConductionParams& p, double v_read, double t_kelvin);

/// Row voltage whose unit-state current is `fraction` of the unit-state current
/// at v_read, so that cell currents are linear in the encoded input.
double predistort_input(double fraction, const ConductionParams& p, double v_read, double t_kelvin);

struct MvmErrorStats {
    std::vector<double> per_trial;  // relative RMS error per trial
    double median = 0.0;
    double mean = 0.0;
    double ci_low = 0.0;   // 95 % order-statistic interval of the median
    double ci_high = 0.0;
    double quantization_bound = 0.0;  // relative RMS error bound from quantization alone
};

struct MvmOptions {
    double v_read = kInferenceReadVoltage;
    double t_kelvin = 300.0;
};

/// Monte Carlo MVM fidelity. Each trial samples a differential pair of arrays,
/// programs them open loop from the nominal device, reads every input column of
/// `x_inputs` with predistorted row voltages, decodes y = alpha (I+ - I-) with
/// alpha fitted by least squares on one-hot test vectors, and records the
/// relative RMS error against w * x.
MvmErrorStats mvm_error_mc(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x_inputs,
                           std::optional<int> levels, double sigma_d2d, double c2c_rel,
                           int n_trials, std::uint64_t seed, const ConductionParams& p,
                           const MvmOptions& opt = {});

}  // namespace femem
