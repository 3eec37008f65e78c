#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace restmorph {

// A parsed command line, free of any CLI-library types so it can be built
// directly in tests. Optionals record which knobs the user actually set;
// unset knobs defer to the config file and then to the built-in defaults.
struct CliInvocation {
    std::string subcommand; // "run" | "validate-spec" | "replay" | "diff-seq"

    std::string spec_path; // "-" reads the document from stdin
    std::string base_url;
    std::string config_path;              // "" = no config file
    std::string output_dir = "restmorph-out";
    std::string session_id;               // "" = timestamp-derived (run only)
    std::string llm_spec;                 // "scripted:<dir>" | "http"
    std::string endpoint;                 // http mode override
    std::string model_id;                 // http mode override
    std::string templates_dir;            // "" = builtin prompts

    std::optional<double> temperature;
    std::optional<int> batch;
    std::optional<double> coverage_target;
    std::optional<int> plateau;
    std::optional<long long> request_budget;
    std::optional<long long> time_budget_seconds;
    std::optional<int> repair_attempts;
    std::optional<long long> timeout_ms;
    std::vector<std::string> headers; // repeatable "Name: value" pairs
    bool fail_on_findings = false;

    std::string seq_ours;     // diff-seq positional 1
    std::string seq_baseline; // diff-seq positional 2
};

// Executes one parsed invocation. Exit codes: 0 the command completed (test
// failures are findings, not tool errors), 1 findings present and
// --fail-on-findings was set, 2 configuration trouble, 3 spec parse failure
// or missing/unreadable artifacts.
int run_invocation(const CliInvocation& inv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr);

// Full entry point: parse argv, then run_invocation. Usage errors exit 2,
// --help exits 0. Streams are injectable so tests can run in-process.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

} // namespace restmorph
