#include "heterosim/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::pair<std::string, std::string> split_assignment(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--set", "expected key=value, got '" + text + "'");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heterogeneous modular robot organism simulator"};
    app.require_subcommand(1);

    heterosim::RunConfig run_config;
    std::vector<std::string> assignments;
    auto* run = app.add_subcommand("run", "Run a scenario and write the event log and report");
    run->add_option("--scenario", run_config.scenario_path, "Scenario JSON file")->required();
    run->add_option("--out", run_config.out_path, "Event log output (JSON Lines)");
    run->add_option("--report", run_config.report_path, "Report output (JSON); stdout when omitted");
    run->add_option("--set", assignments, "Configuration override key=value (repeatable)");
    run->add_flag("-v,--verbose", run_config.verbosity, "Print a run summary to stderr");

    std::filesystem::path validate_path;
    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
    validate->add_option("--scenario", validate_path, "Scenario JSON file")->required();

    auto* list = app.add_subcommand("list-builtins", "List built-in experiment names");

    try {
        app.parse(argc, argv);
        for (const auto& a : assignments) run_config.overrides.push_back(split_assignment(a));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : heterosim::kExitConfigError;
    }

    if (run->parsed()) return heterosim::run(run_config, std::cout, std::cerr);
    if (validate->parsed()) return heterosim::validate_scenario_file(validate_path, std::cout, std::cerr);
    if (list->parsed()) {
        for (const auto& name : heterosim::builtin_names()) std::cout << name << "\n";
        return heterosim::kExitSuccess;
    }
    return heterosim::kExitConfigError;
}
