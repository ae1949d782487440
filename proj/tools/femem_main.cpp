#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "femem/commands.hpp"
#include "femem/config.hpp"
#include "femem/errors.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3 };

std::string command_list() {
    std::string out;
    for (std::string_view n : femem::commands::command_names()) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compact-model simulator for ferroelectric HZO/WOx memristors"};
    app.set_version_flag("--version", std::string(femem::commands::tool_version()));

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::string command;
    bool dump_config = false;
    app.add_option("--config", config_path, "INI configuration file (defaults when omitted)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--command", command, "One of: " + command_list());
    app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    femem::config::Config cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) {
                std::cerr << "error: cannot read config file " << config_path << "\n";
                return kConfig;
            }
            std::ostringstream text;
            text << in.rdbuf();
            cfg = femem::config::parse_config(text.str());
        }
    } catch (const femem::config::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return kConfig;
    }

    if (dump_config) {
        std::cout << femem::config::emit_config(cfg);
        return kOk;
    }
    if (command.empty()) {
        std::cerr << "error: --command is required (" << command_list() << ")\n";
        return kUsage;
    }

    try {
        for (const auto& f : femem::commands::run_command(command, cfg, out_dir, seed)) {
            std::cout << f.string() << "\n";
        }
    } catch (const femem::commands::UnknownCommand& e) {
        std::cerr << "error: " << e.what() << " (known: " << command_list() << ")\n";
        return kUsage;
    } catch (const femem::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const femem::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const femem::ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const femem::InfeasibleError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const femem::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
