#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ionsim/protocol.hpp"
#include "ionsim/verify.hpp"

namespace ionsim::config {

using Json = nlohmann::ordered_json;

struct DimsConfig {
    int x = 32;
    int y = 32;
    int guard = 4;
};

struct TimeGridConfig {
    double t_max = 1.0;
    int samples = 100;
};

struct TrackedLevel {
    dynamics::Axis axis = dynamics::Axis::X;
    int n = 0;
};

/// A pulse as configured: the spec plus its (possibly symbolic) duration.
struct PulseEntry {
    dynamics::PulseSpec spec;
    protocol::DurationSpec duration;
};

struct ProtocolConfig {
    protocol::InitialState initial;
    std::vector<protocol::Step> steps;
    int target_m = 8;
    int target_n = 10;
    bool record_trajectory = false;
};

struct CommensurabilityScanConfig {
    int n_upper = 4;
    int n_lower = 4;
    int k = 4;
    double omega = 1.0;
    coupling::EtaGrid grid{0.02, 1.0, 50};
    bool with_full_run = false;
};

struct ResonanceScanConfig {
    dynamics::PulseSpec pulse;  // eta/k/omega/nu; delta comes from the grid
    dynamics::DeltaGrid grid{0.0, 0.0, 1};
    dynamics::ResonanceScanOptions options;
};

using ScanConfig = std::variant<CommensurabilityScanConfig, ResonanceScanConfig>;

/// One on-disk run description; drives all four subcommands.
struct RunConfig {
    DimsConfig dims;
    protocol::RunMode run_mode = protocol::RunMode::IdealPerBranch;
    protocol::InitialState initial;
    std::optional<PulseEntry> pulse;
    std::optional<TimeGridConfig> time_grid;
    std::vector<TrackedLevel> tracked_levels;
    double ode_tol = 1e-8;
    std::optional<ProtocolConfig> protocol;
    std::optional<ScanConfig> scan;
    verify::VerifyOptions verify_options;
    std::optional<std::string> output_path;
};

/// Parses a config document; throws ConfigError carrying the JSON-pointer
/// path of the offending field. Unknown keys are rejected.
RunConfig load_run_config(const Json& document);

/// Canonical serialization; load(serialize(load(x))) == load(x).
Json serialize(const RunConfig& config);

/// Parse a JSON text (file contents) into a document, reporting the byte
/// offset of syntax errors.
Json parse_document(const std::string& text);

/// Applies a `--set dotted.path=value` override onto a document. The value is
/// parsed as JSON when possible, otherwise taken as a string.
void apply_override(Json& document, const std::string& assignment);

} // namespace ionsim::config
