#include "femem/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "femem/constants.hpp"
#include "femem/errors.hpp"

namespace femem {

using namespace constants;

RegressionResult fit_linear(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ModelError("fit_linear: size mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw ModelError("fit_linear needs at least two points");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw ModelError("fit_linear: degenerate abscissae");
    RegressionResult r;
    r.n = static_cast<int>(n);
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - (r.slope * xs[i] + r.intercept);
        ss_res += e * e;
    }
    r.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    if (n > 2) {
        const double s2 = ss_res / static_cast<double>(n - 2);
        r.slope_stderr = std::sqrt(s2 / sxx);
        r.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return r;
}

void validate(const SweepSet& data) {
    std::set<double> temps;
    for (const Sweep& s : data) {
        if (!(s.t_kelvin > 0.0)) throw ModelError("sweep temperature must be positive");
        if (!temps.insert(s.t_kelvin).second) throw ModelError("sweep temperatures must be distinct");
        for (std::size_t k = 1; k < s.points.size(); ++k) {
            if (!(s.points[k].v > s.points[k - 1].v)) throw ModelError("sweep must be sorted by v");
        }
    }
}

namespace {

constexpr double kWindowSlack = 1e-12;

struct WindowData {
    std::vector<double> v;
    std::vector<double> j;
};

WindowData in_window(const Sweep& s, VoltageWindow w) {
    WindowData out;
    for (const SweepPoint& pt : s.points) {
        if (pt.v >= w.lo - kWindowSlack && pt.v <= w.hi + kWindowSlack) {
            out.v.push_back(pt.v);
            out.j.push_back(pt.j);
        }
    }
    return out;
}

void require_shape(const SweepSet& data, VoltageWindow w, std::size_t min_temps) {
    validate(data);
    if (data.size() < min_temps) {
        throw ModelError("extraction needs at least " + std::to_string(min_temps) + " temperatures");
    }
    for (const Sweep& s : data) {
        if (in_window(s, w).v.size() < 4) throw ModelError("extraction needs >= 4 points in the window");
    }
}

std::vector<double> inverse_temperatures(const SweepSet& data) {
    std::vector<double> inv;
    for (const Sweep& s : data) inv.push_back(1.0 / s.t_kelvin);
    return inv;
}

RegressionResult pf_regression(const std::vector<double>& v, const std::vector<double>& j) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(j[k] > 0.0) || !(v[k] > 0.0)) throw ModelError("PF regression needs positive V and J");
        x.push_back(std::sqrt(v[k]));
        y.push_back(std::log(j[k] / v[k]));
    }
    return fit_linear(x, y);
}

RegressionResult ohmic_regression(const std::vector<double>& v, const std::vector<double>& j,
                                  double t_kelvin) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(j[k] > 0.0) || !(v[k] > 0.0)) throw ModelError("Ohmic regression needs positive V and J");
        x.push_back(std::log(v[k]));
        y.push_back(std::log(j[k] / std::pow(t_kelvin, 1.5)));
    }
    return fit_linear(x, y);
}

PfExtraction pf_from_fits(const SweepSet& data, std::vector<RegressionResult> fits, double d_fe) {
    PfExtraction out;
    const std::vector<double> inv_t = inverse_temperatures(data);
    std::vector<double> slopes, intercepts;
    for (const RegressionResult& r : fits) {
        slopes.push_back(r.slope);
        intercepts.push_back(r.intercept);
    }
    for (const Sweep& s : data) out.temperatures.push_back(s.t_kelvin);
    out.per_t = std::move(fits);
    out.slope_vs_inv_t = fit_linear(inv_t, slopes);
    // m(T) = (q / k T) sqrt(q / (pi eps0 eps_r d)), so dm/d(1/T) = (q/k) sqrt(...).
    const double c = out.slope_vs_inv_t.slope * k_b / q;
    if (!(c > 0.0)) throw ModelError("non-positive PF slope trend: data is not in the PF regime");
    out.eps_r = q / (pi * eps0 * d_fe * c * c);
    out.intercept_arrhenius = fit_linear(inv_t, intercepts);
    out.phi_pf_ev = -out.intercept_arrhenius.slope * k_b / q;
    return out;
}

OhmicExtraction ohmic_from_fits(const SweepSet& data, std::vector<RegressionResult> fits) {
    OhmicExtraction out;
    const std::vector<double> inv_t = inverse_temperatures(data);
    std::vector<double> intercepts;
    for (const RegressionResult& r : fits) intercepts.push_back(r.intercept);
    for (const Sweep& s : data) out.temperatures.push_back(s.t_kelvin);
    out.per_t = std::move(fits);
    out.intercept_arrhenius = fit_linear(inv_t, intercepts);
    out.ea_ohm_ev = -out.intercept_arrhenius.slope * k_b / q;
    return out;
}

}  // namespace

PfExtraction extract_pf(const SweepSet& data, double d_fe, VoltageWindow window) {
    if (!(d_fe > 0.0)) throw ModelError("d_fe must be positive");
    require_shape(data, window, 3);
    std::vector<RegressionResult> fits;
    for (const Sweep& s : data) {
        const WindowData w = in_window(s, window);
        fits.push_back(pf_regression(w.v, w.j));
    }
    return pf_from_fits(data, std::move(fits), d_fe);
}

OhmicExtraction extract_ohmic(const SweepSet& data, VoltageWindow window, double max_slope_dev) {
    require_shape(data, window, 3);
    std::vector<RegressionResult> fits;
    for (const Sweep& s : data) {
        const WindowData w = in_window(s, window);
        fits.push_back(ohmic_regression(w.v, w.j, s.t_kelvin));
        if (std::abs(fits.back().slope - 1.0) > max_slope_dev) {
            throw ModelError("log-log slope " + std::to_string(fits.back().slope) +
                             " is far from 1: data is not in the Ohmic regime");
        }
    }
    return ohmic_from_fits(data, std::move(fits));
}

CompositeExtraction extract_composite(const SweepSet& data, double d_fe, VoltageWindow pf_window,
                                      VoltageWindow ohmic_window, int max_iterations) {
    if (!(d_fe > 0.0)) throw ModelError("d_fe must be positive");
    require_shape(data, pf_window, 3);
    require_shape(data, ohmic_window, 3);

    const std::size_t nt = data.size();
    std::vector<RegressionResult> pf_fits(nt), ohm_fits(nt);
    std::vector<bool> have_pf(nt, false);
    CompositeExtraction out;

    auto pf_current = [](const RegressionResult& r, double v) {
        return v * std::exp(r.intercept + r.slope * std::sqrt(v));
    };
    auto ohmic_current = [](const RegressionResult& r, double v, double t) {
        return std::pow(t, 1.5) * std::exp(r.intercept) * std::pow(v, r.slope);
    };

    double change = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iterations && change > 1e-13; ++it) {
        change = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            const double t = data[k].t_kelvin;
            WindowData lo = in_window(data[k], ohmic_window);
            if (have_pf[k]) {
                for (std::size_t i = 0; i < lo.v.size(); ++i) lo.j[i] -= pf_current(pf_fits[k], lo.v[i]);
            }
            const RegressionResult ohm = ohmic_regression(lo.v, lo.j, t);

            WindowData hi = in_window(data[k], pf_window);
            for (std::size_t i = 0; i < hi.v.size(); ++i) hi.j[i] -= ohmic_current(ohm, hi.v[i], t);
            const RegressionResult pf = pf_regression(hi.v, hi.j);

            if (have_pf[k]) {
                change = std::max({change, std::abs(pf.slope - pf_fits[k].slope) / std::abs(pf.slope),
                                   std::abs(pf.intercept - pf_fits[k].intercept),
                                   std::abs(ohm.intercept - ohm_fits[k].intercept)});
            } else {
                change = std::numeric_limits<double>::infinity();
            }
            ohm_fits[k] = ohm;
            pf_fits[k] = pf;
            have_pf[k] = true;
        }
    }
    if (change > 1e-9) {
        throw NumericalError("two-channel separation did not converge", change);
    }
    out.iterations = it;
    out.pf = pf_from_fits(data, std::move(pf_fits), d_fe);
    out.ohmic = ohmic_from_fits(data, std::move(ohm_fits));
    return out;
}

namespace {

double interpolate_j(const Sweep& s, double v0) {
    const auto& pts = s.points;
    if (pts.empty() || v0 < pts.front().v || v0 > pts.back().v) {
        throw ModelError("v0 outside the sweep range at T=" + std::to_string(s.t_kelvin));
    }
    auto it = std::lower_bound(pts.begin(), pts.end(), v0,
                               [](const SweepPoint& p, double v) { return p.v < v; });
    if (it->v == v0) return it->j;
    const SweepPoint& b = *it;
    const SweepPoint& a = *(it - 1);
    return a.j + (b.j - a.j) * (v0 - a.v) / (b.v - a.v);
}

double relative_spread(const std::vector<double>& values) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (mean == 0.0) return 0.0;
    return (*mx - *mn) / std::abs(mean);
}

}  // namespace

TunnelingDiscrimination discriminate_tunneling(const SweepSet& data, const ConductionParams& p,
                                               double v0, double noise_floor) {
    validate(data);
    TunnelingDiscrimination out;
    if (data.size() < 2) return out;

    std::vector<double> measured, simmons;
    const double j_simmons = current_tunneling(v0, p) / p.area;
    for (const Sweep& s : data) {
        measured.push_back(interpolate_j(s, v0));
        simmons.push_back(j_simmons);  // no temperature in the Simmons formula
    }
    out.t_sensitivity = relative_spread(measured);
    out.simmons_sensitivity = relative_spread(simmons);
    const double threshold = std::max(3.0 * out.simmons_sensitivity, noise_floor);
    out.tunneling_rejected = out.t_sensitivity > threshold;
    out.verdict = out.tunneling_rejected ? TunnelingVerdict::rejected : TunnelingVerdict::not_rejected;
    return out;
}

namespace {

struct ProfiledFit {
    double sigma0 = 0.0;
    double sse = 0.0;
    double grad = 0.0;  // d SSE / d A at the profiled sigma0
};

ProfiledFit profile(std::span<const UpdateFitPoint> trace, double a) {
    double sfy = 0.0, sff = 0.0;
    for (const UpdateFitPoint& pt : trace) {
        const double f = -std::expm1(-pt.count / a);
        sfy += f * pt.g;
        sff += f * f;
    }
    ProfiledFit out;
    out.sigma0 = sff > 0.0 ? sfy / sff : 0.0;
    for (const UpdateFitPoint& pt : trace) {
        const double f = -std::expm1(-pt.count / a);
        const double df = -(pt.count / (a * a)) * std::exp(-pt.count / a);
        const double e = pt.g - out.sigma0 * f;
        out.sse += e * e;
        out.grad += -2.0 * e * out.sigma0 * df;
    }
    return out;
}

}  // namespace

UpdateFit fit_update_a(std::span<const UpdateFitPoint> trace) {
    if (trace.size() < 5) throw ModelError("fit_update_a needs at least 5 points");
    for (std::size_t k = 1; k < trace.size(); ++k) {
        if (!(trace[k].count > trace[k - 1].count)) throw ModelError("counts must increase");
    }
    if (!(trace.front().count > 0.0)) throw ModelError("counts must be positive");

    const double a_lo = 0.1;
    const double a_hi = 10.0 * trace.back().count;
    const double la_lo = std::log(a_lo);
    const double la_hi = std::log(a_hi);

    // Coarse log-spaced scan to bracket the global minimum.
    constexpr int kGrid = 512;
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    auto grid_a = [&](int i) { return std::exp(la_lo + (la_hi - la_lo) * i / (kGrid - 1)); };
    for (int i = 0; i < kGrid; ++i) {
        const double sse = profile(trace, grid_a(i)).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best = i;
        }
    }

    double a = grid_a(best);
    const double lo = grid_a(std::max(best - 1, 0));
    const double hi = grid_a(std::min(best + 1, kGrid - 1));
    const double g_lo = profile(trace, lo).grad;
    const double g_hi = profile(trace, hi).grad;
    if (g_lo < 0.0 && g_hi > 0.0) {
        // Interior minimum: polish on the stationarity condition.
        std::uintmax_t iters = 200;
        auto grad = [&](double x) { return profile(trace, x).grad; };
        const auto [r0, r1] = boost::math::tools::toms748_solve(
            grad, lo, hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(52), iters);
        a = 0.5 * (r0 + r1);
    } else {
        // Minimum on a search bound: golden-section inside the bracket.
        double x0 = lo, x1 = hi;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = x1 - gr * (x1 - x0), d = x0 + gr * (x1 - x0);
        double fc = profile(trace, c).sse, fd = profile(trace, d).sse;
        for (int i = 0; i < 200 && (x1 - x0) > 1e-14 * x1; ++i) {
            if (fc < fd) {
                x1 = d;
                d = c;
                fd = fc;
                c = x1 - gr * (x1 - x0);
                fc = profile(trace, c).sse;
            } else {
                x0 = c;
                c = d;
                fc = fd;
                d = x0 + gr * (x1 - x0);
                fd = profile(trace, d).sse;
            }
        }
        a = 0.5 * (x0 + x1);
        for (double edge : {a_lo, a_hi}) {
            if (profile(trace, edge).sse <= profile(trace, a).sse) a = edge;
        }
    }

    const ProfiledFit pf = profile(trace, a);
    UpdateFit out;
    out.a = a;
    out.sigma0 = pf.sigma0;
    out.residual = pf.sse;
    out.near_linear = a >= a_hi * (1.0 - 1e-6);

    // Gauss-Newton covariance of (A, sigma0).
    const auto n = static_cast<double>(trace.size());
    if (n > 2.0) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        for (const UpdateFitPoint& pt : trace) {
            const double f = -std::expm1(-pt.count / a);
            const double df = -(pt.count / (a * a)) * std::exp(-pt.count / a);
            const Eigen::Vector2d row(out.sigma0 * df, f);
            jtj += row * row.transpose();
        }
        const double s2 = pf.sse / (n - 2.0);
        if (std::abs(jtj.determinant()) > 0.0) {
            const Eigen::Matrix2d cov = s2 * jtj.inverse();
            out.a_stderr = std::sqrt(std::max(cov(0, 0), 0.0));
            out.sigma0_stderr = std::sqrt(std::max(cov(1, 1), 0.0));
        }
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw ModelError("quantile of empty data");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

CdfLevels cdf_levels(const std::vector<std::vector<double>>& traces) {
    if (traces.size() < 2) throw ModelError("cdf_levels needs at least two cycles");
    const std::size_t len = traces.front().size();
    for (const auto& t : traces) {
        if (t.size() != len) throw ModelError("all cycles must have the same number of pulses");
    }
    CdfLevels out;
    for (std::size_t k = 0; k < len; ++k) {
        PulseCdf cdf;
        cdf.pulse_index = static_cast<int>(k);
        for (const auto& t : traces) cdf.sorted.push_back(t[k]);
        std::sort(cdf.sorted.begin(), cdf.sorted.end());
        cdf.q25 = quantile_sorted(cdf.sorted, 0.25);
        cdf.q50 = quantile_sorted(cdf.sorted, 0.50);
        cdf.q75 = quantile_sorted(cdf.sorted, 0.75);
        out.per_pulse.push_back(std::move(cdf));
    }
    if (out.per_pulse.empty()) return out;
    out.separated_levels = 1;
    const PulseCdf* level = &out.per_pulse.front();
    for (const PulseCdf& cdf : out.per_pulse) {
        const double pooled_iqr = 0.5 * ((cdf.q75 - cdf.q25) + (level->q75 - level->q25));
        if (std::abs(cdf.q50 - level->q50) > pooled_iqr) {
            ++out.separated_levels;
            level = &cdf;
        }
    }
    return out;
}

}  // namespace femem
