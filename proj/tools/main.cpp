#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ionsim/config.hpp"
#include "ionsim/runner.hpp"

namespace {

ionsim::config::RunConfig load_config(const std::string& path,
                                      const std::vector<std::string>& overrides) {
    ionsim::config::Json document = ionsim::config::Json::object();
    if (!path.empty()) {
        std::ifstream file(path, std::ios::binary);
        if (!file) {
            throw ionsim::ConfigError("/", "cannot open config file '" + path + "'");
        }
        std::ostringstream text;
        text << file.rdbuf();
        document = ionsim::config::parse_document(text.str());
    }
    for (const auto& assignment : overrides) {
        ionsim::config::apply_override(document, assignment);
    }
    return ionsim::config::load_run_config(document);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "ionsim: two-mode trapped-ion sideband dynamics and pulse-sequence "
        "simulator.\nSet IONSIM_THREADS to cap scan parallelism (default 1)."};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string trajectory_path;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* positional = cmd->add_option("config", config_path, "config file (JSON)");
        if (config_required) positional->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--set", overrides,
                        "override a config field, dotted.path=value (repeatable)");
    };

    CLI::App* simulate = app.add_subcommand(
        "simulate", "single-pulse time series of P_e and diagnostics (CSV)");
    add_common(simulate, true);

    CLI::App* protocol = app.add_subcommand(
        "protocol", "run a pulse sequence and report fidelity vs its target (JSON)");
    add_common(protocol, true);
    protocol->add_option("--trajectory", trajectory_path,
                         "also write per-step state amplitudes (JSON)");

    CLI::App* scan = app.add_subcommand(
        "scan", "commensurability or resonance grid scan (JSON)");
    add_common(scan, true);

    CLI::App* verify = app.add_subcommand(
        "verify", "run the verification battery; exit 0 iff all checks pass");
    add_common(verify, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const ionsim::config::RunConfig cfg = load_config(config_path, overrides);
        const std::string out = !out_path.empty()
                                    ? out_path
                                    : cfg.output_path.value_or(std::string{});
        if (simulate->parsed()) return ionsim::runner::run_simulate(cfg, out);
        if (protocol->parsed()) {
            return ionsim::runner::run_protocol(cfg, out, trajectory_path);
        }
        if (scan->parsed()) return ionsim::runner::run_scan(cfg, out);
        return ionsim::runner::run_verify(cfg, out, std::cout);
    } catch (const ionsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
