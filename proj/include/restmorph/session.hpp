#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "restmorph/agents.hpp"
#include "restmorph/llm_client.hpp"
#include "restmorph/prompts.hpp"
#include "restmorph/reporting.hpp"
#include "restmorph/spec_model.hpp"

namespace restmorph {

// Everything a session run needs to know up front. Budgets and bounds must be
// positive as typed; defaults mirror the engine's reference configuration.
struct SessionConfig {
    std::string base_url;
    double target_coverage = 100.0;       // percent of documented operations
    int plateau_window = 5;               // fruitless iterations before stopping
    long long request_budget = 1000;      // total HTTP requests the session may issue
    std::chrono::seconds time_budget{1800};
    int batch_bound = 5;                  // HLMTs requested per iteration
    int repair_max_attempts = 2;          // plan repair round-trips per scenario
    std::chrono::milliseconds per_request_timeout{10000};
    std::map<std::string, AgentConfig> agents; // keyed by role name
    std::vector<std::pair<std::string, std::string>> static_headers;

    // The four agent roles a session employs, in pipeline order.
    static const std::vector<std::string>& roles();
};

// Throws FatalConfigError on non-positive budgets/bounds or a coverage target
// outside (0, 100].
void validate_config(const SessionConfig& config);

// JSON round-trip for config files and report snapshots. Unknown keys are
// rejected so typos fail loudly. Credentials are never part of this shape.
SessionConfig config_from_json(const nlohmann::json& j); // throws FatalConfigError
nlohmann::json config_to_json(const SessionConfig& config);

struct SessionState {
    int iteration_index = 0; // last completed iteration, 1-based
    std::vector<Hlmt> all_hlmts; // refined survivors across iterations
    std::set<std::string> covered_operations; // "METHOD /path" keys
    size_t total_operations = 0;
    long long requests_spent = 0;
    int plateau_counter = 0;
    std::set<std::string> known_slugs;
    std::chrono::steady_clock::time_point started_at{};

    double coverage_percent() const {
        if (total_operations == 0) return 0.0;
        return 100.0 * static_cast<double>(covered_operations.size()) /
               static_cast<double>(total_operations);
    }
};

struct StopDecision {
    bool stop = false;
    std::string reason; // "time-budget" | "request-budget" | "coverage-target"
                        // | "plateau" | "no-new-tests"
};

// Stopping criteria in fixed priority order: time budget, request budget,
// coverage target, plateau. Checked at the top of every iteration.
StopDecision should_stop(const SessionState& state, const SessionConfig& config,
                         std::chrono::steady_clock::time_point now);

// Folds the resolved sequence entries of `results` into the covered set.
// Returns the operation keys that are new, sorted. Coverage never decreases.
std::vector<std::string> update_coverage(SessionState& state,
                                         std::span<const ScenarioResult> results,
                                         const ApiSpecification& spec);

// Supplies one client per agent role ("mr_generator", "mr_refiner",
// "test_generator", "code_refiner"). Returning the same instance for every
// role is fine — scripted runs rely on it.
using ClientFactory = std::function<std::shared_ptr<LlmClient>(const std::string& role)>;

struct RunOptions {
    std::string session_id = "session";
    // Injectable clock so stopping criteria are testable without waiting.
    std::function<std::chrono::steady_clock::time_point()> clock;
    std::optional<TemplateSet> templates; // default: builtin prompts
    std::function<void(const std::string&)> on_progress; // per-iteration lines
};

// The full generate -> refine -> lower -> execute loop, ending on the first
// satisfied stopping criterion (or "no-new-tests" when the generator yields
// nothing). Throws FatalConfigError for unrunnable configs or an empty spec;
// LLM trouble mid-session degrades per agent contracts instead of throwing.
SessionReport run_session(const ApiSpecification& spec, const SessionConfig& config,
                          const ClientFactory& clients, const RunOptions& options = {});

} // namespace restmorph
