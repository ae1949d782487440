#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "femem/conduction.hpp"
#include "femem/device.hpp"
#include "femem/rng.hpp"
#include "femem/state.hpp"

namespace femem {

inline constexpr int kMaxDenseLines = 64;

/// rows x cols array of devices sharing one parameter set. Cell (i, j) joins
/// row line i to column line j; positive current flows row -> column.
struct Crossbar {
    int rows = 0;
    int cols = 0;
    std::vector<DeviceState> cells;  // row-major
    ConductionParams p;
    double t_kelvin = 300.0;

    DeviceState& cell(int i, int j) { return cells[static_cast<std::size_t>(i) * cols + j]; }
    const DeviceState& cell(int i, int j) const {
        return cells[static_cast<std::size_t>(i) * cols + j];
    }
};

/// Independent d2d draws per cell from split streams of `seed`.
Crossbar build(int rows, int cols, const ConductionParams& p, double sigma_d2d, std::uint64_t seed,
               double t_kelvin = 300.0);

struct LineDrive {
    enum class Kind { floating, voltage, virtual_ground };
    Kind kind = Kind::floating;
    double volts = 0.0;

    static LineDrive floating() { return {Kind::floating, 0.0}; }
    static LineDrive voltage(double v) { return {Kind::voltage, v}; }
    static LineDrive virtual_ground() { return {Kind::virtual_ground, 0.0}; }
    bool driven() const { return kind != Kind::floating; }
};

/// Rows take voltage or floating; columns may also be held at virtual ground.
struct BiasScheme {
    std::vector<LineDrive> row_drive;
    std::vector<LineDrive> col_drive;
};

struct NetworkSolution {
    Eigen::VectorXd row_v;       // all row-line voltages
    Eigen::VectorXd col_v;       // all column-line voltages
    Eigen::MatrixXd cell_i;      // rows x cols, row -> column
    Eigen::VectorXd row_i;       // current injected into each row by its driver
    Eigen::VectorXd col_i;       // current injected into each column by its driver
    double kcl_residual = 0.0;   // max |sum I| over floating lines
    int iterations = 0;
};

struct SolverOptions {
    int max_iterations = 200;
    double kcl_tol = 0.0;    // A; 0 iterates to the round-off floor
    double step_tol = 1e-15; // V
    int max_halvings = 40;
};

/// Kirchhoff current law on floating lines with the composite device curve,
/// solved by damped Newton (step halving on residual growth).
NetworkSolution solve_network(const Crossbar& x, const BiasScheme& b, const SolverOptions& opt = {});

/// Column currents with columns at virtual ground: I_j = sum_i I(v_i, cell_ij).
Eigen::VectorXd mvm_read(const Crossbar& x, const Eigen::VectorXd& v_in, double read_range = 0.3);

struct DisturbEntry {
    int row = 0;
    int col = 0;
    double dw = 0.0;
    bool selected = false;
};

struct WriteReport {
    Crossbar array;
    std::vector<DisturbEntry> changed;  // every cell with nonzero dw
    int disturbed_cells = 0;           // changed cells other than the selected one
    double energy = 0.0;               // J, selected plus half-selected cells
};

/// V/2 scheme: the selected cell sees v_write, cells sharing its row or column
/// see v_write/2, the rest see 0 V and are left untouched.
WriteReport write_v_half(const Crossbar& x, int row, int col, const PulseSpec& pulse,
                         const UpdateModel& m, Rng& rng,
                         SchemeKind kind = SchemeKind::amplitude_ramp);

struct SneakMargin {
    double i_selected = 0.0;
    double i_sneak_worst = 0.0;
    double margin = 0.0;  // +inf when no sneak path exists
};

/// Reads one cell with all other lines floating (no selector).
SneakMargin sneak_margin(const Crossbar& x, int row, int col, double v_read);

}  // namespace femem
