#include "femem/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "femem/errors.hpp"

namespace femem {

Crossbar build(int rows, int cols, const ConductionParams& p, double sigma_d2d, std::uint64_t seed,
               double t_kelvin) {
    if (rows < 1 || cols < 1) throw ModelError("crossbar dimensions must be >= 1");
    validate(p);
    Crossbar x;
    x.rows = rows;
    x.cols = cols;
    x.p = p;
    x.t_kelvin = t_kelvin;
    x.cells.reserve(static_cast<std::size_t>(rows) * cols);
    const Rng root(seed);
    for (int k = 0; k < rows * cols; ++k) {
        x.cells.push_back(sample_device(p, sigma_d2d, root.split(static_cast<std::uint64_t>(k)).seed()));
    }
    return x;
}

namespace {

void check_bias(const Crossbar& x, const BiasScheme& b) {
    if (static_cast<int>(b.row_drive.size()) != x.rows || static_cast<int>(b.col_drive.size()) != x.cols) {
        throw ModelError("bias scheme does not match the array dimensions");
    }
    bool any = false;
    for (const LineDrive& d : b.row_drive) {
        if (d.kind == LineDrive::Kind::virtual_ground) throw ModelError("rows cannot be held at virtual ground");
        any = any || d.driven();
    }
    for (const LineDrive& d : b.col_drive) any = any || d.driven();
    if (!any) throw ModelError("at least one line must be driven");
}

double drive_voltage(const LineDrive& d) {
    return d.kind == LineDrive::Kind::voltage ? d.volts : 0.0;
}

}  // namespace

NetworkSolution solve_network(const Crossbar& x, const BiasScheme& b, const SolverOptions& opt) {
    check_bias(x, b);
    if (x.rows > kMaxDenseLines || x.cols > kMaxDenseLines) {
        throw ModelError("dense nonlinear solve is limited to " + std::to_string(kMaxDenseLines) +
                         " lines per side; use mvm_read for larger arrays");
    }

    NetworkSolution sol;
    sol.row_v = Eigen::VectorXd::Zero(x.rows);
    sol.col_v = Eigen::VectorXd::Zero(x.cols);

    // Unknown index for each floating line, -1 for driven lines.
    std::vector<int> row_unknown(x.rows, -1), col_unknown(x.cols, -1);
    int n = 0;
    double driven_sum = 0.0;
    int driven_count = 0;
    for (int i = 0; i < x.rows; ++i) {
        if (b.row_drive[i].driven()) {
            sol.row_v[i] = drive_voltage(b.row_drive[i]);
            driven_sum += sol.row_v[i];
            ++driven_count;
        }
    }
    for (int j = 0; j < x.cols; ++j) {
        if (b.col_drive[j].driven()) {
            sol.col_v[j] = drive_voltage(b.col_drive[j]);
            driven_sum += sol.col_v[j];
            ++driven_count;
        }
    }
    const double v_init = driven_sum / driven_count;
    for (int i = 0; i < x.rows; ++i) {
        if (!b.row_drive[i].driven()) {
            row_unknown[i] = n++;
            sol.row_v[i] = v_init;
        }
    }
    for (int j = 0; j < x.cols; ++j) {
        if (!b.col_drive[j].driven()) {
            col_unknown[j] = n++;
            sol.col_v[j] = v_init;
        }
    }

    // Net current leaving every floating node.
    auto residual = [&](const Eigen::VectorXd& rv, const Eigen::VectorXd& cv) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < x.rows; ++i) {
            for (int j = 0; j < x.cols; ++j) {
                if (row_unknown[i] < 0 && col_unknown[j] < 0) continue;
                const double ic = current_total(rv[i] - cv[j], x.t_kelvin, x.p, x.cell(i, j));
                if (row_unknown[i] >= 0) f[row_unknown[i]] += ic;
                if (col_unknown[j] >= 0) f[col_unknown[j]] -= ic;
            }
        }
        return f;
    };

    if (n > 0) {
        Eigen::VectorXd f = residual(sol.row_v, sol.col_v);
        double norm = f.lpNorm<Eigen::Infinity>();
        int it = 0;
        for (; it < opt.max_iterations && norm > opt.kcl_tol; ++it) {
            Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < x.rows; ++i) {
                for (int j = 0; j < x.cols; ++j) {
                    const int ri = row_unknown[i];
                    const int cj = col_unknown[j];
                    if (ri < 0 && cj < 0) continue;
                    const double g =
                        conductance_total(sol.row_v[i] - sol.col_v[j], x.t_kelvin, x.p, x.cell(i, j));
                    if (ri >= 0) jac(ri, ri) += g;
                    if (cj >= 0) jac(cj, cj) += g;
                    if (ri >= 0 && cj >= 0) {
                        jac(ri, cj) -= g;
                        jac(cj, ri) -= g;
                    }
                }
            }
            const Eigen::VectorXd step = jac.partialPivLu().solve(-f);

            double alpha = 1.0;
            bool improved = false;
            Eigen::VectorXd rv, cv, f_new;
            for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
                rv = sol.row_v;
                cv = sol.col_v;
                for (int i = 0; i < x.rows; ++i) {
                    if (row_unknown[i] >= 0) rv[i] += alpha * step[row_unknown[i]];
                }
                for (int j = 0; j < x.cols; ++j) {
                    if (col_unknown[j] >= 0) cv[j] += alpha * step[col_unknown[j]];
                }
                f_new = residual(rv, cv);
                if (f_new.lpNorm<Eigen::Infinity>() < norm) {
                    improved = true;
                    break;
                }
            }
            if (!improved) break;  // round-off floor
            sol.row_v = rv;
            sol.col_v = cv;
            f = f_new;
            norm = f.lpNorm<Eigen::Infinity>();
            if (alpha * step.lpNorm<Eigen::Infinity>() <= opt.step_tol) {
                ++it;
                break;
            }
        }
        sol.iterations = it;
        sol.kcl_residual = norm;
        if (!(norm < 1e-12)) {
            throw NumericalError("nodal solve did not converge (KCL residual " + std::to_string(norm) + " A)",
                                 norm);
        }
    }

    sol.cell_i = Eigen::MatrixXd::Zero(x.rows, x.cols);
    sol.row_i = Eigen::VectorXd::Zero(x.rows);
    sol.col_i = Eigen::VectorXd::Zero(x.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            const double ic = current_total(sol.row_v[i] - sol.col_v[j], x.t_kelvin, x.p, x.cell(i, j));
            sol.cell_i(i, j) = ic;
            sol.row_i[i] += ic;
            sol.col_i[j] -= ic;
        }
    }
    for (int i = 0; i < x.rows; ++i) {
        if (!b.row_drive[i].driven()) sol.row_i[i] = 0.0;
    }
    for (int j = 0; j < x.cols; ++j) {
        if (!b.col_drive[j].driven()) sol.col_i[j] = 0.0;
    }
    return sol;
}

Eigen::VectorXd mvm_read(const Crossbar& x, const Eigen::VectorXd& v_in, double read_range) {
    if (v_in.size() != x.rows) throw ModelError("input vector length must equal the row count");
    for (Eigen::Index i = 0; i < v_in.size(); ++i) {
        if (!(std::abs(v_in[i]) <= read_range)) throw ModelError("input voltage outside the read range");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.cols);
    for (int i = 0; i < x.rows; ++i) {
        if (v_in[i] == 0.0) continue;
        for (int j = 0; j < x.cols; ++j) out[j] += current_total(v_in[i], x.t_kelvin, x.p, x.cell(i, j));
    }
    return out;
}

WriteReport write_v_half(const Crossbar& x, int row, int col, const PulseSpec& pulse,
                         const UpdateModel& m, Rng& rng, SchemeKind kind) {
    if (row < 0 || row >= x.rows || col < 0 || col >= x.cols) throw ModelError("cell index out of range");
    WriteReport rep;
    rep.array = x;
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            const bool selected = i == row && j == col;
            if (!selected && i != row && j != col) continue;
            const PulseSpec seen{selected ? pulse.v_write : 0.5 * pulse.v_write, pulse.t_width};
            const DeviceState before = x.cell(i, j);
            rep.energy += write_energy(seen, before, x.p, x.t_kelvin);
            const DeviceState after = apply_pulse(before, seen, m, rng, kind);
            rep.array.cell(i, j) = after;
            const double dw = after.w - before.w;
            if (dw != 0.0) {
                rep.changed.push_back({i, j, dw, selected});
                if (!selected) ++rep.disturbed_cells;
            }
        }
    }
    return rep;
}

SneakMargin sneak_margin(const Crossbar& x, int row, int col, double v_read) {
    if (row < 0 || row >= x.rows || col < 0 || col >= x.cols) throw ModelError("cell index out of range");
    SneakMargin out;
    if (x.rows < 2 || x.cols < 2) {
        out.i_selected = current_total(v_read, x.t_kelvin, x.p, x.cell(row, col));
        out.margin = std::numeric_limits<double>::infinity();
        return out;
    }
    BiasScheme b;
    b.row_drive.assign(x.rows, LineDrive::floating());
    b.col_drive.assign(x.cols, LineDrive::floating());
    b.row_drive[row] = LineDrive::voltage(v_read);
    b.col_drive[col] = LineDrive::virtual_ground();
    const NetworkSolution sol = solve_network(x, b);
    out.i_selected = sol.cell_i(row, col);
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            if (i == row && j == col) continue;
            out.i_sneak_worst = std::max(out.i_sneak_worst, std::abs(sol.cell_i(i, j)));
        }
    }
    out.margin = out.i_sneak_worst > 0.0 ? out.i_selected / out.i_sneak_worst
                                         : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace femem
