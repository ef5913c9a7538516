#pragma once

#include <iosfwd>
#include <string>

#include "ionsim/config.hpp"

namespace ionsim::runner {

/// Drivers behind the CLI subcommands. Each writes its output file (or
/// standard output when `out_path` is empty) and returns the process exit
/// code: 0 success, 1 verification/physics failure. Usage and config problems
/// throw ConfigError / std::invalid_argument, mapped to exit code 2 by the
/// CLI.
int run_simulate(const config::RunConfig& cfg, const std::string& out_path);
int run_protocol(const config::RunConfig& cfg, const std::string& out_path,
                 const std::string& trajectory_path);
int run_scan(const config::RunConfig& cfg, const std::string& out_path);
int run_verify(const config::RunConfig& cfg, const std::string& out_path,
               std::ostream& console);

/// Builds the protocol::Protocol from a config, with every effective-model
/// pulse's eta optionally overridden (used by scan full runs).
protocol::Protocol protocol_from_config(const config::RunConfig& cfg,
                                        double eta_override = -1.0);

} // namespace ionsim::runner
