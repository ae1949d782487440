#include "femem/conduction.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "femem/constants.hpp"
#include "femem/errors.hpp"

namespace femem {

namespace {

using namespace constants;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw ModelError(std::string(what) + " must be finite");
}

void require_bias(double v, double t_kelvin) {
    require_finite(v, "voltage");
    require_finite(t_kelvin, "temperature");
    if (t_kelvin <= 0.0) throw ModelError("temperature must be positive");
}

// Field-driven barrier lowering in volts: sqrt(qV / (pi eps0 eps_r d)).
double pf_lowering(double v, const ConductionParams& p) {
    return std::sqrt(q * v / (pi * eps0 * p.eps_r * p.d_fe));
}

// Ohmic conductance (A/V) at unit state multiplier.
double ohmic_conductance(double t_kelvin, const ConductionParams& p) {
    return p.c_ohm * std::pow(t_kelvin, 1.5) * std::exp(-q * p.ea_ohm_ev / (k_b * t_kelvin)) *
           p.area / p.d_fe;
}

// PF current at unit multiplier, v >= 0.
double pf_unit(double v, double t_kelvin, const ConductionParams& p) {
    if (p.c_pf == 0.0 || v == 0.0) return 0.0;
    const double expo = q * (-p.phi_pf_ev + pf_lowering(v, p)) / (k_b * t_kelvin);
    return p.c_pf * (v / p.d_fe) * std::exp(expo) * p.area;
}

// Current at unit multiplier, v >= 0.
double unit_current(double v, double t_kelvin, const ConductionParams& p) {
    return ohmic_conductance(t_kelvin, p) * v + pf_unit(v, t_kelvin, p);
}

}  // namespace

void validate(const ConductionParams& p) {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ModelError(msg);
    };
    check(std::isfinite(p.d_fe) && p.d_fe > 0.0, "d_fe must be positive");
    check(std::isfinite(p.area) && p.area > 0.0, "area must be positive");
    check(p.phi_pf_ev > 0.0 && p.phi_pf_ev < 3.0, "phi_pf must lie in (0, 3) eV");
    check(std::isfinite(p.eps_r) && p.eps_r >= 1.0, "eps_r must be >= 1");
    check(std::isfinite(p.ea_ohm_ev) && p.ea_ohm_ev >= 0.0, "ea_ohm must be >= 0");
    check(std::isfinite(p.c_ohm) && p.c_ohm > 0.0, "c_ohm must be positive");
    check(std::isfinite(p.c_pf) && p.c_pf >= 0.0, "c_pf must be >= 0");
    check(p.tun.phi_bar_ev > 0.0 && p.tun.m_eff > 0.0, "tunneling barrier and mass must be positive");
    check(std::isfinite(p.g_lrs) && p.g_lrs >= 1.0, "g_lrs must be >= 1");
}

double state_multiplier(const ConductionParams& p, const DeviceState& s) {
    return std::pow(p.g_lrs, s.w) * std::pow(10.0, -s.d2d_log10);
}

double current_ohmic(double v, double t_kelvin, const ConductionParams& p, double g) {
    require_bias(v, t_kelvin);
    if (v < 0.0) throw ModelError("current_ohmic expects v >= 0");
    return g * ohmic_conductance(t_kelvin, p) * v;
}

double current_pf(double v, double t_kelvin, const ConductionParams& p, double g) {
    require_bias(v, t_kelvin);
    if (v < 0.0) throw ModelError("current_pf expects v >= 0");
    return g * pf_unit(v, t_kelvin, p);
}

double pf_slope(double t_kelvin, const ConductionParams& p) {
    return (q / (k_b * t_kelvin)) * std::sqrt(q / (pi * eps0 * p.eps_r * p.d_fe));
}

double current_tunneling(double v, const ConductionParams& p) {
    require_finite(v, "voltage");
    const double vabs = std::abs(v);
    if (vabs >= p.tun.phi_bar_ev) {
        throw ModelError("direct tunneling formula is out of regime for |v| >= phi_bar");
    }
    if (vabs == 0.0) return 0.0;
    // Simmons, intermediate bias, rectangular barrier of width d_fe.
    const double d = p.d_fe;
    const double phi_mean = ev_to_joule(p.tun.phi_bar_ev) - 0.5 * q * vabs;
    const double a = 4.0 * pi * d * std::sqrt(2.0 * p.tun.m_eff * m_e) / h;
    const double j0 = q / (2.0 * pi * h * d * d);
    const double hi = phi_mean + q * vabs;
    const double j = j0 * (phi_mean * std::exp(-a * std::sqrt(phi_mean)) - hi * std::exp(-a * std::sqrt(hi)));
    return std::copysign(j * p.area, v);
}

double current_total(double v, double t_kelvin, const ConductionParams& p, const DeviceState& s) {
    require_bias(v, t_kelvin);
    const double g = state_multiplier(p, s);
    const double vabs = std::abs(v);
    const double i = g * unit_current(vabs, t_kelvin, p);
    return v < 0.0 ? -i : i;
}

double conductance_total(double v, double t_kelvin, const ConductionParams& p,
                         const DeviceState& s) {
    require_bias(v, t_kelvin);
    const double g = state_multiplier(p, s);
    const double vabs = std::abs(v);
    double dpf = 0.0;
    if (p.c_pf != 0.0) {
        const double m = pf_slope(t_kelvin, p);
        const double base = p.c_pf / p.d_fe * p.area * std::exp(-q * p.phi_pf_ev / (k_b * t_kelvin));
        const double sv = std::sqrt(vabs);
        dpf = base * std::exp(m * sv) * (1.0 + 0.5 * m * sv);
    }
    return g * (ohmic_conductance(t_kelvin, p) + dpf);
}

Readout read(double v_read, double t_kelvin, const ConductionParams& p, const DeviceState& s) {
    if (v_read == 0.0) throw ModelError("read voltage must be nonzero");
    Readout r;
    r.v_read = v_read;
    r.t_kelvin = t_kelvin;
    r.i_amps = current_total(v_read, t_kelvin, p, s);
    r.r_ohms = v_read / r.i_amps;
    r.j_a_per_m2 = r.i_amps / p.area;
    return r;
}

double on_off(const ConductionParams& p, double t_kelvin, double v_read) {
    if (!(v_read > 0.0)) throw ModelError("on_off expects v_read > 0");
    DeviceState lrs;
    lrs.w = 1.0;
    const DeviceState hrs;
    return current_total(v_read, t_kelvin, p, lrs) / current_total(v_read, t_kelvin, p, hrs);
}

double self_selection_ratio(double v, double t_kelvin, const ConductionParams& p,
                            const DeviceState& s) {
    if (!(v > 0.0)) throw ModelError("self_selection_ratio expects v > 0");
    return current_total(v, t_kelvin, p, s) / current_total(0.5 * v, t_kelvin, p, s);
}

namespace {

DeviceState lrs_state() {
    DeviceState s;
    s.w = 1.0;
    return s;
}

// PF prefactor that makes both channels equal at the crossover, then a common
// scale that puts R(v_r_on, LRS) on target.
void finish(ConductionParams& p, const CalibrationTargets& tg) {
    const double t = tg.t_kelvin;
    p.c_ohm = 1.0;
    if (p.c_pf != 0.0) {
        const double m = pf_slope(t, p);
        p.c_pf = std::pow(t, 1.5) * std::exp(q * (p.phi_pf_ev - p.ea_ohm_ev) / (k_b * t)) *
                 std::exp(-m * std::sqrt(tg.v_crossover));
    }
    const double r_unit = tg.v_r_on / current_total(tg.v_r_on, t, p, lrs_state());
    const double scale = r_unit / tg.r_on_ohms;
    p.c_ohm *= scale;
    p.c_pf *= scale;
}

}  // namespace

ConductionParams calibrate(const CalibrationTargets& tg, const ConductionParams& skeleton) {
    ConductionParams p = skeleton;
    p.c_ohm = 1.0;
    p.c_pf = 0.0;
    p.g_lrs = 1.0;
    if (p.eps_r < 1.0) p.eps_r = 1.0;
    validate(p);

    for (double x : {tg.r_on_ohms, tg.on_off, tg.selection_ratio, tg.v_r_on, tg.v_on_off,
                     tg.v_selection, tg.v_crossover, tg.t_kelvin}) {
        if (!std::isfinite(x) || x <= 0.0) throw ModelError("calibration targets must be positive");
    }
    if (tg.on_off < 1.0) {
        throw InfeasibleError("ON/OFF target below 1 cannot be met by a state multiplier",
                              {0.0, tg.on_off - 1.0, 0.0});
    }

    p.g_lrs = tg.on_off;

    const double t = tg.t_kelvin;
    const double sel_lo = tg.v_selection;
    const double sel_hi = 0.5 * tg.v_selection;
    constexpr double kOhmicTol = 1e-9;

    if (std::abs(tg.selection_ratio - 2.0) <= kOhmicTol * 2.0) {
        // Linear I(V): the PF channel is switched off.
        p.c_pf = 0.0;
        finish(p, tg);
    } else if (tg.selection_ratio < 2.0) {
        throw InfeasibleError("selection ratio below 2 is sublinear",
                              {0.0, 0.0, tg.selection_ratio / 2.0 - 1.0});
    } else {
        // Shape of the unit current with both channels equal at the crossover.
        auto ratio_for = [&](double log_eps) {
            ConductionParams trial = p;
            trial.eps_r = std::exp(log_eps);
            const double m = pf_slope(t, trial);
            const double sx = std::sqrt(tg.v_crossover);
            auto shape = [&](double v) { return v * (1.0 + std::exp(m * (std::sqrt(v) - sx))); };
            return shape(sel_lo) / shape(sel_hi);
        };
        const double lo = 0.0;             // eps_r = 1
        const double hi = std::log(1e12);
        const double at_lo = ratio_for(lo);
        if (at_lo < tg.selection_ratio) {
            throw InfeasibleError(
                "selection ratio target exceeds what eps_r >= 1 can deliver",
                {0.0, 0.0, at_lo / tg.selection_ratio - 1.0});
        }
        auto f = [&](double le) { return ratio_for(le) - tg.selection_ratio; };
        std::uintmax_t iters = 200;
        const auto bracket = boost::math::tools::toms748_solve(
            f, lo, hi, f(lo), f(hi), boost::math::tools::eps_tolerance<double>(52), iters);
        // The ratio falls with eps_r. The selection target is a floor, so start
        // from the low end of the bracket and step down until the full model,
        // with its own rounding, sits strictly above it.
        double log_eps = bracket.first;
        for (int k = 0; k <= 64; ++k, log_eps -= 1e-12) {
            p.eps_r = std::exp(log_eps);
            p.c_pf = 1.0;
            finish(p, tg);
            if (self_selection_ratio(sel_lo, t, p, lrs_state()) > tg.selection_ratio) break;
        }
    }

    const DeviceState lrs = lrs_state();
    const std::vector<double> residuals{
        read(tg.v_r_on, t, p, lrs).r_ohms / tg.r_on_ohms - 1.0,
        on_off(p, t, tg.v_on_off) / tg.on_off - 1.0,
        self_selection_ratio(tg.v_selection, t, p, lrs) / tg.selection_ratio - 1.0};
    for (double r : residuals) {
        if (!(std::abs(r) <= 0.01)) throw InfeasibleError("calibration residual above 1 %", residuals);
    }
    validate(p);
    return p;
}

const ConductionParams& default_params() {
    static const ConductionParams params = calibrate(CalibrationTargets{}, ConductionParams{});
    return params;
}

}  // namespace femem
