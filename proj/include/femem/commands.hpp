#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "femem/config.hpp"
#include "femem/extraction.hpp"

namespace femem::commands {

class UnknownCommand : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

std::string_view tool_version();

const std::vector<std::string_view>& command_names();

/// Runs one experiment, writing its CSVs and `<name>.meta.json` into out_dir
/// (created if missing). Returns the written files in order.
std::vector<std::filesystem::path> run_command(std::string_view name, const config::Config& cfg,
                                               const std::filesystem::path& out_dir,
                                               std::uint64_t seed);

enum class Polarity { potentiation, depression };

/// Normalized update trace of one preset scheme from the fully reset state
/// (w = 0 for potentiation, w = 1 for depression); count is the number of
/// pulses beyond the onset so far, g the distance travelled.
std::vector<UpdateFitPoint> update_trace(SchemeKind kind, Polarity pol, const UpdateModel& m, Rng& rng);

struct BenchSummary {
    double on_off = 0.0;           // at 0.1 V
    double r_on_ohms = 0.0;        // at 0.3 V
    double selection_ratio = 0.0;  // I(0.5 V) / I(0.25 V), LRS
    double a_pot[3] = {};          // amplitude_ramp, width_ramp, hybrid
    double a_dep[3] = {};
    double c2c_percent = 0.0;
    double write_energy_j = 0.0;   // -1.6 V / 50 us from HRS
    double memory_window_v = 0.0;
};

BenchSummary bench_summary(const config::Config& cfg, std::uint64_t seed);

}  // namespace femem::commands
