#pragma once

#include "heterosim/experiments.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace heterosim {

/// Parses a scenario document. `origin` names the source in diagnostics.
/// Throws ParseError (with line and field) or ValidationError.
ScenarioScript parse_scenario(std::string_view text, const std::string& origin = "<scenario>",
                              const SimConfig& defaults = {});

/// Reads and parses a scenario file; throws Error when the file is missing.
ScenarioScript load_scenario(const std::filesystem::path& path, const SimConfig& defaults = {});

/// Names accepted by the "builtin" key.
std::vector<std::string> builtin_names();

/// One JSON object per line with keys tick, t, event, subjects, data.
std::string event_log_jsonl(const EventLog& log);
std::string event_jsonl_line(const Event& event);

/// Report document with fields organisms, total_mips, total_wh, speeds,
/// rescue_success.
std::string report_json(const MetricsReport& report);

/// Applies a flat JSON object of configuration keys (the HETEROSIM_CONFIG
/// defaults file format).
void apply_config_json(SimConfig& config, std::string_view text, const std::string& origin);

struct RunConfig {
    std::filesystem::path scenario_path;
    std::filesystem::path out_path;     // empty: no event log file
    std::filesystem::path report_path;  // empty: report on stdout
    std::vector<std::pair<std::string, std::string>> overrides;
    int verbosity = 0;
};

enum ExitStatus : int { kExitSuccess = 0, kExitConfigError = 1, kExitScenarioFailure = 2 };

/// Loads, runs and writes outputs. Configuration precedence, lowest first:
/// built-in defaults, the HETEROSIM_CONFIG file, the scenario's "config"
/// block, then command-line overrides.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Loads and validates only.
int validate_scenario_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

}  // namespace heterosim
