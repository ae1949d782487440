#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "femem/conduction.hpp"
#include "femem/device.hpp"

namespace femem::config {

/// Parse or validation failure with a 1-based source location (0 when the
/// problem is not tied to a line).
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& msg, int line = 0, int column = 0);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

  private:
    int line_;
    int column_;
};

enum class ValueType { number, integer, boolean, text, number_list };

using Value = std::variant<double, long long, bool, std::string, std::vector<double>>;

/// One documented key. Units are part of the key name (d_fe_nm, v_read_mv).
struct KeySpec {
    std::string_view section;
    std::string_view key;
    std::string_view base;  // key without the unit suffix, for unit-mismatch diagnostics
    ValueType type;
    std::string_view default_text;  // empty with `optional` = no default
    bool optional = false;
    std::optional<double> min{};
    std::optional<double> max{};
    bool min_exclusive = false;
    bool max_exclusive = false;
};

const std::vector<KeySpec>& schema();

/// Parsed configuration: every documented key with a default is present;
/// optional keys only when set.
class Config {
  public:
    Config();  // all defaults

    bool has(std::string_view section, std::string_view key) const;
    const Value& get(std::string_view section, std::string_view key) const;
    double number(std::string_view section, std::string_view key) const;
    long long integer(std::string_view section, std::string_view key) const;
    bool flag(std::string_view section, std::string_view key) const;
    const std::string& text(std::string_view section, std::string_view key) const;
    const std::vector<double>& list(std::string_view section, std::string_view key) const;

    void set(std::string_view section, std::string_view key, Value v);

    friend bool operator==(const Config&, const Config&) = default;

  private:
    std::map<std::string, std::map<std::string, Value, std::less<>>, std::less<>> values_;
};

/// Grammar: `[section]` headers, `key = value` lines, `#` comments, blank lines.
/// Lists are comma separated numbers; booleans are true/false.
Config parse_config(std::string_view text);

/// Canonical text in schema order; parse_config(emit_config(c)) == c.
std::string emit_config(const Config& c);

/// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const Config& c);

// Domain views. Throw ConfigError when the values violate model invariants.
CalibrationTargets calibration_targets(const Config& c);
ConductionParams conduction_params(const Config& c);
UpdateModel update_model(const Config& c);
HysteresisModel hysteresis_model(const Config& c);

}  // namespace femem::config
