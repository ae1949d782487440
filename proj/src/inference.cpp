#include "femem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "femem/errors.hpp"
#include "femem/extraction.hpp"

namespace femem {

namespace {

void check_weights(const Eigen::MatrixXd& w) {
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double v = w.data()[k];
        if (!std::isfinite(v) || v < -1.0 || v > 1.0) throw ModelError("weights must lie in [-1, 1]");
    }
}

double unit_read_current(const ConductionParams& p, double v_read, double t_kelvin) {
    return current_total(v_read, t_kelvin, p, DeviceState{});
}

double quantize(double mag, std::optional<int> levels) {
    if (!levels) return mag;
    const double steps = *levels - 1;
    return std::round(mag * steps) / steps;
}

}  // namespace

Eigen::MatrixXd WeightMapping::decode() const {
    return ((g_pos - g_neg) / (g_max - g_min)).transpose();
}

double WeightMapping::quantization_step_bound() const {
    return levels ? 0.5 / (*levels - 1) : 0.0;
}

WeightMapping map_weights(const Eigen::MatrixXd& w, std::optional<int> levels,
                          const ConductionParams& p, double v_read, double t_kelvin) {
    if (levels && *levels < 2) throw ModelError("at least two conductance levels are required");
    check_weights(w);
    WeightMapping m;
    m.levels = levels;
    m.v_read = v_read;
    DeviceState lrs;
    lrs.w = 1.0;
    m.g_min = unit_read_current(p, v_read, t_kelvin) / v_read;
    m.g_max = current_total(v_read, t_kelvin, p, lrs) / v_read;
    if (!(m.g_max > m.g_min)) throw ModelError("device has no conductance window (g_lrs = 1)");
    const double span = m.g_max - m.g_min;
    m.g_pos = Eigen::MatrixXd::Constant(w.cols(), w.rows(), m.g_min);
    m.g_neg = m.g_pos;
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
        for (Eigen::Index i = 0; i < w.cols(); ++i) {
            const double q = quantize(std::abs(w(o, i)), levels);
            if (w(o, i) > 0.0) m.g_pos(i, o) += q * span;
            if (w(o, i) < 0.0) m.g_neg(i, o) += q * span;
        }
    }
    return m;
}

double state_for_conductance(double g, const ConductionParams& p, double v_read, double t_kelvin) {
    const double g_hrs = unit_read_current(p, v_read, t_kelvin) / v_read;
    if (p.g_lrs <= 1.0) return 0.0;
    return std::clamp(std::log(g / g_hrs) / std::log(p.g_lrs), 0.0, 1.0);
}

double predistort_input(double fraction, const ConductionParams& p, double v_read, double t_kelvin) {
    if (!(std::abs(fraction) <= 1.0)) throw ModelError("input fraction must lie in [-1, 1]");
    if (fraction == 0.0) return 0.0;
    const double mag = std::abs(fraction);
    if (mag == 1.0) return std::copysign(v_read, fraction);
    const double target = mag * unit_read_current(p, v_read, t_kelvin);
    auto f = [&](double v) { return unit_read_current(p, v, t_kelvin) - target; };
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, 0.0, v_read, -target, f(v_read), boost::math::tools::eps_tolerance<double>(53), iters);
    return std::copysign(0.5 * (a + b), fraction);
}

WriteVerifyResult program_write_verify(const Crossbar& x, const Eigen::MatrixXd& targets,
                                       const UpdateModel& m, double tol, int max_pulses, Rng& rng,
                                       const WriteVerifyOptions& opt) {
    if (targets.rows() != x.rows || targets.cols() != x.cols) {
        throw ModelError("target matrix does not match the array");
    }
    if (!(tol >= 0.0) || max_pulses < 0) throw ModelError("tol and max_pulses must be non-negative");
    m.validate();

    WriteVerifyResult out;
    out.array = x;
    out.pulses = Eigen::MatrixXi::Zero(x.rows, x.cols);
    out.residuals = Eigen::MatrixXd::Zero(x.rows, x.cols);
    out.converged.setConstant(x.rows, x.cols, false);
    out.unreachable.setConstant(x.rows, x.cols, false);

    auto conductance = [&](const DeviceState& s) {
        return current_total(opt.v_read, x.t_kelvin, x.p, s) / opt.v_read;
    };

    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            DeviceState s = x.cell(i, j);
            DeviceState lo = s, hi = s;
            lo.w = 0.0;
            hi.w = 1.0;
            const double g_lo = conductance(lo);
            const double g_hi = conductance(hi);
            const double tol_abs = tol * (g_hi - g_lo);
            double target = targets(i, j);
            if (target < g_lo - tol_abs || target > g_hi + tol_abs) {
                out.unreachable(i, j) = true;
                target = std::clamp(target, g_lo, g_hi);
            }
            int n = 0;
            double g = conductance(s);
            while (true) {
                if (std::abs(g - target) <= tol_abs) {
                    out.converged(i, j) = true;
                    break;
                }
                if (n == max_pulses) break;
                const PulseSpec& pulse = g < target ? opt.potentiation : opt.depression;
                s = apply_pulse(s, pulse, m, rng, opt.kind);
                g = conductance(s);
                ++n;
            }
            out.array.cell(i, j) = s;
            out.pulses(i, j) = n;
            out.residuals(i, j) = g - targets(i, j);
        }
    }
    return out;
}

MvmErrorStats mvm_error_mc(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x_inputs,
                           std::optional<int> levels, double sigma_d2d, double c2c_rel,
                           int n_trials, std::uint64_t seed, const ConductionParams& p,
                           const MvmOptions& opt) {
    if (n_trials < 1) throw ModelError("n_trials must be >= 1");
    if (x_inputs.rows() != w.cols()) throw ModelError("input length must equal the weight column count");
    if (!(c2c_rel >= 0.0 && c2c_rel < 1.0)) throw ModelError("c2c_rel must lie in [0, 1)");
    const double x_scale = x_inputs.cwiseAbs().maxCoeff();
    if (!(x_scale > 0.0)) throw ModelError("inputs must not be all zero");

    const WeightMapping mapping = map_weights(w, levels, p, opt.v_read, opt.t_kelvin);
    const Eigen::MatrixXd w_hat = mapping.decode();
    const auto n_in = static_cast<int>(w.cols());
    const auto n_out = static_cast<int>(w.rows());

    Eigen::MatrixXd state_pos(n_in, n_out), state_neg(n_in, n_out);
    for (int i = 0; i < n_in; ++i) {
        for (int j = 0; j < n_out; ++j) {
            state_pos(i, j) = state_for_conductance(mapping.g_pos(i, j), p, opt.v_read, opt.t_kelvin);
            state_neg(i, j) = state_for_conductance(mapping.g_neg(i, j), p, opt.v_read, opt.t_kelvin);
        }
    }

    Eigen::MatrixXd v_in(n_in, x_inputs.cols());
    for (Eigen::Index k = 0; k < x_inputs.cols(); ++k) {
        for (int i = 0; i < n_in; ++i) {
            v_in(i, k) = predistort_input(x_inputs(i, k) / x_scale, p, opt.v_read, opt.t_kelvin);
        }
    }

    const Eigen::MatrixXd exact = w * x_inputs;
    const double exact_norm = exact.norm();
    if (!(exact_norm > 0.0)) throw ModelError("w * x is identically zero; relative error undefined");

    MvmErrorStats stats;
    {
        const double delta = mapping.quantization_step_bound();
        double sq = 0.0;
        for (Eigen::Index k = 0; k < x_inputs.cols(); ++k) {
            const double b = delta * x_inputs.col(k).lpNorm<1>();
            sq += n_out * b * b;
        }
        stats.quantization_bound = std::sqrt(sq) / exact_norm;
    }

    const Rng root(seed);
    for (int trial = 0; trial < n_trials; ++trial) {
        const Rng trial_rng = root.split(static_cast<std::uint64_t>(trial));
        Crossbar pos = build(n_in, n_out, p, sigma_d2d, trial_rng.split(0).seed(), opt.t_kelvin);
        Crossbar neg = build(n_in, n_out, p, sigma_d2d, trial_rng.split(1).seed(), opt.t_kelvin);
        Rng prog = trial_rng.split(2);
        for (int i = 0; i < n_in; ++i) {
            for (int j = 0; j < n_out; ++j) {
                pos.cell(i, j).w = std::clamp(state_pos(i, j) * prog.lognormal_unit_mean(c2c_rel), 0.0, 1.0);
                neg.cell(i, j).w = std::clamp(state_neg(i, j) * prog.lognormal_unit_mean(c2c_rel), 0.0, 1.0);
            }
        }

        // Decoder gain from one-hot test vectors at full scale.
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n_in; ++i) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n_in);
            v[i] = opt.v_read;
            const Eigen::VectorXd di = mvm_read(pos, v, opt.v_read) - mvm_read(neg, v, opt.v_read);
            const Eigen::VectorXd expected = w_hat.col(i) * x_scale;
            num += expected.dot(di);
            den += di.dot(di);
        }
        const double alpha_nominal =
            x_scale / ((p.g_lrs - 1.0) * unit_read_current(p, opt.v_read, opt.t_kelvin));
        const double alpha = (den > 0.0 && num != 0.0) ? num / den : alpha_nominal;

        double err_sq = 0.0;
        for (Eigen::Index k = 0; k < x_inputs.cols(); ++k) {
            const Eigen::VectorXd v = v_in.col(k);
            const Eigen::VectorXd y = alpha * (mvm_read(pos, v, opt.v_read) - mvm_read(neg, v, opt.v_read));
            err_sq += (y - exact.col(k)).squaredNorm();
        }
        stats.per_trial.push_back(std::sqrt(err_sq) / exact_norm);
    }

    std::vector<double> sorted = stats.per_trial;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    stats.median = quantile_sorted(sorted, 0.5);
    stats.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    const double half_width = 1.96 * std::sqrt(n) / 2.0;
    const auto lo = static_cast<long>(std::floor(n / 2.0 - half_width)) - 1;
    const auto hi = static_cast<long>(std::ceil(n / 2.0 + half_width)) - 1;
    const long last = static_cast<long>(sorted.size()) - 1;
    stats.ci_low = sorted[static_cast<std::size_t>(std::clamp(lo, 0L, last))];
    stats.ci_high = sorted[static_cast<std::size_t>(std::clamp(hi, 0L, last))];
    return stats;
}

}  // namespace femem
