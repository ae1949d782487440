#include "femem/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "femem/csv.hpp"
#include "femem/errors.hpp"

namespace femem::config {

ConfigError::ConfigError(const std::string& msg, int line, int column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + msg
                                  : msg),
      line_(line),
      column_(column) {}

namespace {

using VT = ValueType;
constexpr auto kInf = std::nullopt;

// clang-format off
const std::vector<KeySpec> kSchema = {
    // device
    {"device", "d_fe_nm", "d_fe", VT::number, "4.9", false, 0.0, kInf, true},
    {"device", "area_um2", "area", VT::number, "14400", false, 0.0, kInf, true},
    {"device", "phi_pf_ev", "phi_pf", VT::number, "0.15", false, 0.0, 3.0, true, true},
    {"device", "ea_ohm_ev", "ea_ohm", VT::number, "0.15", false, 0.0, kInf},
    {"device", "tun_phi_bar_ev", "tun_phi_bar", VT::number, "1", false, 0.0, kInf, true},
    {"device", "tun_m_eff_ratio", "tun_m_eff", VT::number, "0.3", false, 0.0, kInf, true},
    {"device", "calibrate", "calibrate", VT::boolean, "true"},
    {"device", "eps_r", "eps_r", VT::number, "", true, 1.0, kInf},
    {"device", "c_pf_a_per_v_m", "c_pf", VT::number, "", true, 0.0, kInf},
    {"device", "c_ohm_a_per_v_m_k1p5", "c_ohm", VT::number, "", true, 0.0, kInf, true},
    {"device", "g_lrs_ratio", "g_lrs", VT::number, "", true, 1.0, kInf},
    {"device", "target_r_on_mohm", "target_r_on", VT::number, "100", false, 0.0, kInf, true},
    {"device", "target_on_off_ratio", "target_on_off", VT::number, "10", false, 1.0, kInf},
    {"device", "target_selection_ratio", "target_selection", VT::number, "40", false, 0.0, kInf, true},
    {"device", "crossover_mv", "crossover", VT::number, "200", false, 0.0, kInf, true},
    {"device", "calibration_t_kelvin", "calibration_t", VT::number, "300", false, 0.0, kInf, true},
    // update
    {"update", "n_full_pulses", "n_full", VT::integer, "50", false, 2.0, kInf},
    {"update", "v_on_pot_mv", "v_on_pot", VT::number, "-600", false, kInf, 0.0, false, true},
    {"update", "v_on_dep_mv", "v_on_dep", VT::number, "800", false, 0.0, kInf, true},
    {"update", "c2c_rel", "c2c", VT::number, "0.1", false, 0.0, 1.0, false, true},
    {"update", "a_pot_amplitude_ramp_pulses", "a_pot_amplitude_ramp", VT::number, "25", false, 0.0, kInf, true},
    {"update", "a_dep_amplitude_ramp_pulses", "a_dep_amplitude_ramp", VT::number, "8", false, 0.0, kInf, true},
    {"update", "a_pot_width_ramp_pulses", "a_pot_width_ramp", VT::number, "8", false, 0.0, kInf, true},
    {"update", "a_dep_width_ramp_pulses", "a_dep_width_ramp", VT::number, "25", false, 0.0, kInf, true},
    {"update", "a_pot_hybrid_pulses", "a_pot_hybrid", VT::number, "15", false, 0.0, kInf, true},
    {"update", "a_dep_hybrid_pulses", "a_dep_hybrid", VT::number, "15", false, 0.0, kInf, true},
    // variation
    {"variation", "sigma_d2d_log10", "sigma_d2d", VT::number, "0.1", false, 0.0, kInf},
    {"variation", "drift_rate_per_s", "drift_rate", VT::number, "0", false, 0.0, kInf},
    // read
    {"read", "v_read_mv", "v_read", VT::number, "300", false, 0.0, kInf, true},
    {"read", "t_kelvin", "t", VT::number, "300", false, 0.0, kInf, true},
    // iv
    {"iv", "v_start_mv", "v_start", VT::number, "0"},
    {"iv", "v_stop_mv", "v_stop", VT::number, "1000"},
    {"iv", "v_step_mv", "v_step", VT::number, "10", false, 0.0, kInf, true},
    {"iv", "temperatures_kelvin", "temperatures", VT::number_list, "300", false, 0.0, kInf, true},
    {"iv", "states_w", "states", VT::number_list, "0, 1", false, 0.0, 1.0},
    // hysteresis
    {"hysteresis", "v_c_neg_mv", "v_c_neg", VT::number, "-600", false, kInf, 0.0, false, true},
    {"hysteresis", "v_c_pos_mv", "v_c_pos", VT::number, "800", false, 0.0, kInf, true},
    {"hysteresis", "width_mv", "width", VT::number, "100", false, 0.0, kInf, true},
    {"hysteresis", "gate_mv", "gate", VT::number, "300", false, 0.0, kInf},
    {"hysteresis", "v_min_mv", "v_min", VT::number, "-1600", false, kInf, 0.0, false, true},
    {"hysteresis", "v_max_mv", "v_max", VT::number, "2400", false, 0.0, kInf, true},
    {"hysteresis", "v_step_mv", "v_step", VT::number, "25", false, 0.0, kInf, true},
    // scheme
    {"scheme", "kind", "kind", VT::text, "amplitude_ramp"},
    {"scheme", "cycles", "cycles", VT::integer, "17", false, 1.0, kInf},
    {"scheme", "alternate_field", "alternate_field", VT::boolean, "false"},
    // fitA
    {"fitA", "noisy_repeats", "noisy_repeats", VT::integer, "100", false, 0.0, kInf},
    // cdf
    {"cdf", "kind", "kind", VT::text, "amplitude_ramp"},
    {"cdf", "polarity", "polarity", VT::text, "depression"},
    {"cdf", "cycles", "cycles", VT::integer, "17", false, 2.0, kInf},
    // retention
    {"retention", "duration_days", "duration", VT::number, "11", false, 0.0, kInf},
    {"retention", "samples", "samples", VT::integer, "12", false, 2.0, kInf},
    {"retention", "states_w", "states", VT::number_list, "0, 0.5, 1", false, 0.0, 1.0},
    // d2d
    {"d2d", "devices", "devices", VT::integer, "10000", false, 2.0, kInf},
    // scaling
    {"scaling", "areas_um2", "areas", VT::number_list, "100, 1600, 14400", false, 0.0, kInf, true},
    {"scaling", "v_start_mv", "v_start", VT::number, "0", false, 0.0, kInf},
    {"scaling", "v_stop_mv", "v_stop", VT::number, "1000", false, 0.0, kInf},
    {"scaling", "v_step_mv", "v_step", VT::number, "50", false, 0.0, kInf, true},
    // arrhenius
    {"arrhenius", "temperatures_kelvin", "temperatures", VT::number_list, "300, 320, 340, 360", false, 0.0, kInf, true},
    {"arrhenius", "v_step_mv", "v_step", VT::number, "10", false, 0.0, kInf, true},
    {"arrhenius", "v_stop_mv", "v_stop", VT::number, "300", false, 0.0, kInf, true},
    {"arrhenius", "state_w", "state", VT::number, "1", false, 0.0, 1.0},
    {"arrhenius", "input_csv", "input_csv", VT::text, ""},
    // xbar
    {"xbar", "sizes", "sizes", VT::number_list, "2, 4, 8", false, 1.0, 64.0},
    {"xbar", "v_read_mv", "v_read", VT::number, "500", false, 0.0, kInf, true},
    {"xbar", "write_v_mv", "write_v", VT::number, "2400", false, kInf, kInf},
    {"xbar", "write_width_us", "write_width", VT::number, "50", false, 0.0, kInf, true},
    // mvm
    {"mvm", "outputs", "outputs", VT::integer, "8", false, 1.0, 64.0},
    {"mvm", "inputs", "inputs", VT::integer, "8", false, 1.0, 64.0},
    {"mvm", "vectors", "vectors", VT::integer, "16", false, 1.0, kInf},
    {"mvm", "levels", "levels", VT::integer, "11", false, 0.0, kInf},
    {"mvm", "trials", "trials", VT::integer, "100", false, 1.0, kInf},
    {"mvm", "weights_csv", "weights_csv", VT::text, ""},
    {"mvm", "inputs_csv", "inputs_csv", VT::text, ""},
    // bench
    {"bench", "c2c_repeats", "c2c_repeats", VT::integer, "1000", false, 2.0, kInf},
};
// clang-format on

const KeySpec* find_spec(std::string_view section, std::string_view key) {
    for (const KeySpec& s : kSchema) {
        if (s.section == section && s.key == key) return &s;
    }
    return nullptr;
}

bool known_section(std::string_view section) {
    return std::any_of(kSchema.begin(), kSchema.end(),
                       [&](const KeySpec& s) { return s.section == section; });
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
    return v;
}

void check_range(const KeySpec& spec, double v, int line, int col) {
    auto fail = [&](const std::string& why) {
        throw ConfigError("value " + format_number(v) + " for '" + std::string(spec.key) + "' " + why, line, col);
    };
    if (spec.min) {
        if (spec.min_exclusive ? !(v > *spec.min) : !(v >= *spec.min)) {
            fail(std::string("out of range: must be ") + (spec.min_exclusive ? "> " : ">= ") + format_number(*spec.min));
        }
    }
    if (spec.max) {
        if (spec.max_exclusive ? !(v < *spec.max) : !(v <= *spec.max)) {
            fail(std::string("out of range: must be ") + (spec.max_exclusive ? "< " : "<= ") + format_number(*spec.max));
        }
    }
}

Value parse_value(const KeySpec& spec, std::string_view raw, int line, int col) {
    const std::string_view s = trim(raw);
    auto bad = [&](const char* what) {
        throw ConfigError(std::string("expected ") + what + " for '" + std::string(spec.key) + "', got '" +
                              std::string(s) + "'",
                          line, col);
    };
    switch (spec.type) {
        case VT::number: {
            auto v = to_double(s);
            if (!v) bad("a number");
            check_range(spec, *v, line, col);
            return *v;
        }
        case VT::integer: {
            long long v = 0;
            std::string_view t = s;
            if (!t.empty() && t.front() == '+') t.remove_prefix(1);
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) bad("an integer");
            check_range(spec, static_cast<double>(v), line, col);
            return v;
        }
        case VT::boolean:
            if (s == "true") return true;
            if (s == "false") return false;
            bad("true or false");
            break;
        case VT::text:
            return std::string(s);
        case VT::number_list: {
            std::vector<double> out;
            std::size_t start = 0;
            while (true) {
                const auto comma = s.find(',', start);
                const std::string_view item = s.substr(start, comma == std::string_view::npos ? s.npos : comma - start);
                auto v = to_double(item);
                if (!v) bad("a comma-separated list of numbers");
                check_range(spec, *v, line, col);
                out.push_back(*v);
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            return out;
        }
    }
    return {};
}

std::string emit_value(const Value& v) {
    struct Visitor {
        std::string operator()(double d) const { return format_number(d); }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const std::vector<double>& l) const {
            std::string out;
            for (std::size_t k = 0; k < l.size(); ++k) {
                if (k) out += ", ";
                out += format_number(l[k]);
            }
            return out;
        }
    };
    return std::visit(Visitor{}, v);
}

}  // namespace

const std::vector<KeySpec>& schema() { return kSchema; }

Config::Config() {
    for (const KeySpec& s : kSchema) {
        if (s.optional) continue;
        values_[std::string(s.section)][std::string(s.key)] = parse_value(s, s.default_text, 0, 0);
    }
}

bool Config::has(std::string_view section, std::string_view key) const {
    auto it = values_.find(section);
    return it != values_.end() && it->second.find(key) != it->second.end();
}

const Value& Config::get(std::string_view section, std::string_view key) const {
    auto it = values_.find(section);
    if (it != values_.end()) {
        auto kt = it->second.find(key);
        if (kt != it->second.end()) return kt->second;
    }
    throw ConfigError("missing value for [" + std::string(section) + "] " + std::string(key));
}

namespace {
template <class T>
const T& typed(const Value& v, std::string_view key) {
    if (const T* p = std::get_if<T>(&v)) return *p;
    throw ConfigError("key '" + std::string(key) + "' has a different type");
}
}  // namespace

double Config::number(std::string_view section, std::string_view key) const {
    const Value& v = get(section, key);
    if (const long long* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
    return typed<double>(v, key);
}
long long Config::integer(std::string_view section, std::string_view key) const {
    return typed<long long>(get(section, key), key);
}
bool Config::flag(std::string_view section, std::string_view key) const {
    return typed<bool>(get(section, key), key);
}
const std::string& Config::text(std::string_view section, std::string_view key) const {
    return typed<std::string>(get(section, key), key);
}
const std::vector<double>& Config::list(std::string_view section, std::string_view key) const {
    return typed<std::vector<double>>(get(section, key), key);
}

void Config::set(std::string_view section, std::string_view key, Value v) {
    const KeySpec* spec = find_spec(section, key);
    if (!spec) throw ConfigError("unknown key [" + std::string(section) + "] " + std::string(key));
    // Round-trip through the text form so range checks and types apply.
    values_[std::string(section)][std::string(key)] = parse_value(*spec, emit_value(v), 0, 0);
}

Config parse_config(std::string_view text) {
    Config cfg;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen_keys;
    std::set<std::string> seen_sections;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto hash = raw.find('#');
        const std::string_view body = hash == std::string_view::npos ? raw : raw.substr(0, hash);
        const std::string_view line = trim(body);
        if (line.empty()) continue;
        const int indent = static_cast<int>(body.find_first_not_of(" \t\r")) + 1;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no, indent);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_section(section)) {
                throw ConfigError("unknown section [" + section + "]", line_no, indent + 1);
            }
            if (!seen_sections.insert(section).second) {
                throw ConfigError("duplicate section [" + section + "]", line_no, indent);
            }
            continue;
        }

        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, indent);
        if (section.empty()) throw ConfigError("key outside of any section", line_no, indent);
        const std::string key(trim(body.substr(0, eq)));
        if (key.empty()) throw ConfigError("missing key before '='", line_no, indent);
        const std::string_view value_raw = body.substr(eq + 1);
        const auto value_off = value_raw.find_first_not_of(" \t");
        const int value_col = static_cast<int>(eq + 2 + (value_off == std::string_view::npos ? 0 : value_off));

        const KeySpec* spec = find_spec(section, key);
        if (!spec) {
            for (const KeySpec& s : kSchema) {
                if (s.section == section && s.base != s.key && key.rfind(std::string(s.base) + "_", 0) == 0) {
                    throw ConfigError("unit mismatch: '" + key + "' is not accepted, use '" + std::string(s.key) + "'",
                                      line_no, indent);
                }
            }
            throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no, indent);
        }
        if (!seen_keys.emplace(section, key).second) {
            throw ConfigError("duplicate key '" + key + "'", line_no, indent);
        }
        if (spec->type != VT::text && trim(value_raw).empty()) {
            throw ConfigError("missing value for '" + key + "'", line_no, value_col);
        }
        cfg.set(section, key, parse_value(*spec, value_raw, line_no, value_col));
    }
    // Cross-key rule: solved quantities may only be given when calibration is off.
    if (cfg.flag("device", "calibrate")) {
        for (const char* k : {"eps_r", "c_pf_a_per_v_m", "c_ohm_a_per_v_m_k1p5", "g_lrs_ratio"}) {
            if (cfg.has("device", k)) {
                throw ConfigError(std::string("'") + k + "' is solved by calibration; set calibrate = false to give it");
            }
        }
    } else {
        for (const char* k : {"eps_r", "c_pf_a_per_v_m", "c_ohm_a_per_v_m_k1p5", "g_lrs_ratio"}) {
            if (!cfg.has("device", k)) {
                throw ConfigError(std::string("calibrate = false requires '") + k + "'");
            }
        }
    }
    return cfg;
}

std::string emit_config(const Config& c) {
    std::string out;
    std::string_view section;
    for (const KeySpec& s : kSchema) {
        if (!c.has(s.section, s.key)) continue;
        if (s.section != section) {
            if (!out.empty()) out += '\n';
            out += "[" + std::string(s.section) + "]\n";
            section = s.section;
        }
        out += std::string(s.key) + " = " + emit_value(c.get(s.section, s.key)) + "\n";
    }
    return out;
}

std::string config_hash(const Config& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CalibrationTargets calibration_targets(const Config& c) {
    CalibrationTargets t;
    t.r_on_ohms = c.number("device", "target_r_on_mohm") * 1e6;
    t.on_off = c.number("device", "target_on_off_ratio");
    t.selection_ratio = c.number("device", "target_selection_ratio");
    t.v_crossover = c.number("device", "crossover_mv") * 1e-3;
    t.t_kelvin = c.number("device", "calibration_t_kelvin");
    return t;
}

ConductionParams conduction_params(const Config& c) {
    ConductionParams p;
    p.d_fe = c.number("device", "d_fe_nm") * 1e-9;
    p.area = c.number("device", "area_um2") * 1e-12;
    p.phi_pf_ev = c.number("device", "phi_pf_ev");
    p.ea_ohm_ev = c.number("device", "ea_ohm_ev");
    p.tun.phi_bar_ev = c.number("device", "tun_phi_bar_ev");
    p.tun.m_eff = c.number("device", "tun_m_eff_ratio");
    if (c.flag("device", "calibrate")) return calibrate(calibration_targets(c), p);
    p.eps_r = c.number("device", "eps_r");
    p.c_pf = c.number("device", "c_pf_a_per_v_m");
    p.c_ohm = c.number("device", "c_ohm_a_per_v_m_k1p5");
    p.g_lrs = c.number("device", "g_lrs_ratio");
    try {
        validate(p);
    } catch (const ModelError& e) {
        throw ConfigError(std::string("[device] ") + e.what());
    }
    return p;
}

UpdateModel update_model(const Config& c) {
    UpdateModel m;
    m.n_full = static_cast<int>(c.integer("update", "n_full_pulses"));
    m.v_on_pot = c.number("update", "v_on_pot_mv") * 1e-3;
    m.v_on_dep = c.number("update", "v_on_dep_mv") * 1e-3;
    m.c2c_rel = c.number("update", "c2c_rel");
    m.a_table[SchemeKind::amplitude_ramp] = {c.number("update", "a_pot_amplitude_ramp_pulses"),
                                             c.number("update", "a_dep_amplitude_ramp_pulses")};
    m.a_table[SchemeKind::width_ramp] = {c.number("update", "a_pot_width_ramp_pulses"),
                                         c.number("update", "a_dep_width_ramp_pulses")};
    m.a_table[SchemeKind::hybrid] = {c.number("update", "a_pot_hybrid_pulses"),
                                     c.number("update", "a_dep_hybrid_pulses")};
    try {
        m.validate();
    } catch (const ModelError& e) {
        throw ConfigError(std::string("[update] ") + e.what());
    }
    return m;
}

HysteresisModel hysteresis_model(const Config& c) {
    HysteresisModel h;
    h.v_c_neg = c.number("hysteresis", "v_c_neg_mv") * 1e-3;
    h.v_c_pos = c.number("hysteresis", "v_c_pos_mv") * 1e-3;
    h.width = c.number("hysteresis", "width_mv") * 1e-3;
    h.v_gate = c.number("hysteresis", "gate_mv") * 1e-3;
    if (!(h.v_c_neg < -h.v_gate && h.v_gate < h.v_c_pos)) {
        throw ConfigError("[hysteresis] coercive voltages must lie outside the gate window");
    }
    return h;
}

}  // namespace femem::config
