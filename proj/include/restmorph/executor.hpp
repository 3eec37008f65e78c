#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/emt_plan.hpp"
#include "restmorph/spec_model.hpp"

namespace restmorph {

enum class Phase { Given, When };

std::string phase_text(Phase p);

// What happened to one request step. "Issued" means the service answered with
// a status code or the wait timed out; pure transport failures (connection
// refused, budget exhausted) never count against the request budget.
enum class StepOutcomeKind {
    Ok,             // 2xx (or non-2xx on an expect_success=false step)
    HttpError,      // non-2xx on an expect_success step
    Timeout,        // no response within the per-request timeout
    TransportError, // refused / unreachable / budget exhausted; not issued
    ExtractionMiss, // response arrived but a declared extraction failed
    Skipped         // never attempted: an earlier step already failed
};

std::string step_outcome_text(StepOutcomeKind k);

struct StepOutcome {
    int step_index = 0; // position in the linear given+when order
    Phase phase = Phase::Given;
    HttpMethod method = HttpMethod::Get;
    std::string concrete_path; // resolved path incl. query, base URL stripped
    std::string body_digest;   // fnv1a-64 hex of the sent body, "" when none
    std::optional<int> status_code;
    long long latency_ms = 0;
    StepOutcomeKind outcome = StepOutcomeKind::Ok;
    std::string detail; // reason text for anything that went wrong
};

enum class Verdict { Passed, Failed, FailedPlaceholder };

std::string verdict_text(Verdict v);

// The failure taxonomy, in classification precedence order (timeout first).
enum class FailureKind {
    Timeout,
    ServerCrash,       // any 5xx observed
    RequestContract,   // 4xx on a step that expected success
    UndocumentedStatus,// status absent from the operation's documented set
    ResponseContract,  // body/header shape broke extraction or format checks
    RelationViolation, // all requests fine; the metamorphic relation failed
    Placeholder        // plan was a placeholder; nothing was executed
};

std::string failure_kind_text(FailureKind k);

struct FailureClass {
    FailureKind kind = FailureKind::RelationViolation;
    std::string detail;
};

struct RelationOutcome {
    int assertion_index = 0;
    bool holds = false;
    std::string reason;
};

struct SequenceEntry {
    std::string method;
    std::string path;         // template when resolved, concrete otherwise
    bool resolved = true;

    bool operator==(const SequenceEntry&) const = default;
};

// The ordered operation footprint of one scenario execution: one entry per
// issued request, normalized to (method, path template).
struct Sequence {
    std::vector<SequenceEntry> entries;

    std::string key() const; // "POST /pet -> GET /pet/{petId}"
    bool operator==(const Sequence&) const = default;
};

struct ScenarioResult {
    std::string hlmt_id;
    int iteration_index = 0;
    Verdict verdict = Verdict::Passed;
    std::vector<StepOutcome> step_outcomes;
    std::vector<RelationOutcome> relation_verdicts;
    std::optional<FailureClass> failure_class;
    Sequence sequence;
    int requests_spent = 0;
};

struct ExecutionOptions {
    std::string base_url;
    long long budget_remaining = 1000; // requests this scenario may still issue
    std::chrono::milliseconds per_request_timeout{10000};
    std::vector<std::pair<std::string, std::string>> static_headers;
};

// Runs one plan: given steps, then when steps, aborting after the first
// non-ok step (later steps are recorded as skipped). Assertions are evaluated
// only when every step succeeded. Placeholder plans execute nothing and come
// back as failed-placeholder. The result always carries its failure class
// (when failed) and normalized sequence.
ScenarioResult execute_scenario(const EmtPlan& plan, const ApiSpecification& spec,
                                const ExecutionOptions& options);

// Classification precedence: timeout > server crash (5xx) > request contract
// (4xx on an expect_success step) > undocumented status > response contract
// (extraction/format trouble) > relation violation.
FailureClass classify_failure(const ScenarioResult& result, const ApiSpecification& spec);

// Normalizes the issued requests to spec templates. Requests that resolve to
// no documented operation stay concrete with resolved=false.
Sequence extract_sequence(const ScenarioResult& result, const ApiSpecification& spec);

} // namespace restmorph
