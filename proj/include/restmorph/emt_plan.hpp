#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/diagnostic.hpp"
#include "restmorph/errors.hpp"
#include "restmorph/mt_model.hpp"
#include "restmorph/spec_model.hpp"

namespace restmorph {

// The five metamorphic relation kinds a plan's assertions can state.
enum class RelationKind { Equality, Difference, Inclusion, Exclusion, CountDelta };

std::string relation_kind_text(RelationKind k);
std::optional<RelationKind> parse_relation_kind(const std::string& text);

// Where to pluck a value from a response. Wire form is a "/"-delimited string:
// leading "body" (optional) roots in the JSON body, leading "headers" in the
// response headers; a terminal "#count" takes an array's length; "" is the
// whole body. Examples: "status", "body/items/0/id", "items/#count",
// "headers/X-Expires-After".
struct ValuePath {
    enum class Root { Body, Headers };
    Root root = Root::Body;
    std::vector<std::string> segments;
    bool count = false;

    static ValuePath parse(const std::string& text); // throws PlanParseError
    std::string str() const;

    bool operator==(const ValuePath&) const = default;
};

// "${name}" reference to a value extracted by an earlier step.
struct BindingRef {
    std::string name;

    bool operator==(const BindingRef&) const = default;
};

// Assertion operands: the left side must reference a binding; the right side
// may reference a binding or carry a literal JSON value.
using Operand = std::variant<BindingRef, nlohmann::json>;

struct RelationAssertion {
    RelationKind kind = RelationKind::Equality;
    BindingRef left;
    Operand right;
    std::optional<long long> delta; // count-delta only: expected left - right
};

struct RequestStep {
    HttpMethod method = HttpMethod::Get;
    std::string path_template; // documented template, e.g. "/pet/{petId}"
    std::map<std::string, nlohmann::json> path_args; // placeholder -> value or "${ref}"
    std::map<std::string, nlohmann::json> query;
    std::map<std::string, std::string> headers;
    std::optional<nlohmann::json> body;
    bool expect_success = true; // non-2xx fails the scenario when set
    std::map<std::string, ValuePath> extract; // binding name -> response path
};

// An executable metamorphic test: the lowered, declarative form of one HLMT.
// given_steps establish the seed observation, when_steps the follow-up, and
// assertions state the metamorphic relation over extracted bindings.
struct EmtPlan {
    std::string hlmt_id;
    std::string given_label; // must mirror the HLMT texts verbatim
    std::string when_label;
    std::string then_label;
    bool placeholder = false; // lowering failed; carries no steps/assertions
    std::vector<RequestStep> given_steps;
    std::vector<RequestStep> when_steps;
    std::vector<RelationAssertion> assertions;

    // Union of every step's extract map (later steps shadow earlier names).
    std::map<std::string, ValuePath> bindings() const;
};

// Strict wire-format conversion. plan_from_json throws PlanParseError on any
// structural defect (unknown method/kind, non-string labels, bad value path).
EmtPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const EmtPlan& plan);

// Lenient recovery from raw LLM text followed by strict conversion.
EmtPlan plan_from_text(const std::string& raw_output); // throws PlanParseError

// Structural validation against a parsed spec: every step must name a
// documented operation (template shape match; placeholder spellings may
// differ), path_args must cover the step's placeholders, no step may read a
// binding defined only later, assertions may read any defined binding, labels
// must be non-empty, and placeholder/non-placeholder shape rules must hold.
std::vector<Diagnostic> validate_plan(const EmtPlan& plan, const ApiSpecification& spec);

struct ExtractOutcome {
    bool ok = false;
    nlohmann::json value;
    std::string miss; // why extraction failed, when !ok
};

// Walks `path` into the response. `headers` is a flat string map rendered as
// a JSON object by the caller. Digit segments index arrays and act as keys on
// objects; "#count" requires an array.
ExtractOutcome extract_value(const nlohmann::json& body, const nlohmann::json& headers,
                             const ValuePath& path);

struct RelationVerdict {
    bool holds = false;
    std::string reason; // populated when the relation is violated
};

// Evaluates one relation over concrete operand values. Type mismatches for
// inclusion/count-delta yield a violated verdict with an explanatory reason;
// exclusion stays the exact complement of inclusion even then.
RelationVerdict check_relation(const RelationAssertion& assertion, const nlohmann::json& left,
                               const nlohmann::json& right);

// The degraded plan emitted when repair attempts are exhausted: labels copied
// from the HLMT, no steps, no assertions, placeholder = true.
EmtPlan make_placeholder(const Hlmt& hlmt);

} // namespace restmorph
