#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/diagnostic.hpp"
#include "restmorph/errors.hpp"

namespace restmorph {

// A high-level metamorphic test: a Given-When-Then scenario in prose, as
// proposed by the generator agent. Lowering turns it into an executable plan.
struct Hlmt {
    std::string id;             // generator-chosen, unique within an iteration
    std::string scenario_title; // one-sentence relation statement
    std::string given_text;     // seed input description
    std::string when_text;      // follow-up transformation description
    std::string then_text;      // expected output relation
    int iteration_index = 0;
    std::string semantic_slug;  // always normalize_title(scenario_title)

    bool operator==(const Hlmt&) const = default;
};

// Constructs an Hlmt with the slug invariant already established.
Hlmt make_hlmt(std::string id, std::string scenario_title, std::string given_text,
               std::string when_text, std::string then_text, int iteration_index = 0);

// Deterministic semantic identity of a scenario title:
// lowercase -> drop "mr<digits>" tokens -> non-alphanumeric runs to "_"
// -> collapse repeats -> trim edge underscores. Idempotent; output is [a-z0-9_]*.
std::string normalize_title(const std::string& title);

struct GroupMember {
    std::string session_id;
    int iteration_index = 0;
    std::string hlmt_id;

    bool operator==(const GroupMember&) const = default;
};

struct SemanticGroup {
    std::string slug;
    std::vector<GroupMember> members;
};

// Partitions HLMTs by semantic slug; groups appear in first-appearance order,
// members in input order. Every input lands in exactly one group.
std::vector<SemanticGroup> group_semantic(std::span<const Hlmt> hlmts,
                                          const std::string& session_id);

struct HlmtParse {
    std::vector<Hlmt> hlmts;
    std::vector<std::string> dropped; // one line per discarded array element
};

// Recovers a JSON array from raw LLM output (fences, prose, single quotes,
// unquoted keys, Python literals, trailing commas) and converts its objects
// to HLMTs. Elements missing required fields are dropped with a diagnostic;
// numeric ids are coerced to strings. Throws NoArrayFound when no array can
// be recovered at all.
HlmtParse parse_hlmt_list(const std::string& raw_output, int iteration_index = 0);

// Structural checks on one HLMT. `iteration_peers` are the other HLMTs of the
// same iteration, used for the duplicate-id check. Empty result = valid.
std::vector<Diagnostic> validate_hlmt(const Hlmt& hlmt,
                                      std::span<const Hlmt> iteration_peers = {});

// The lenient recovery pipeline by itself, shared with plan parsing. Repair
// steps are applied in a fixed order so recovery is deterministic:
// strip code fences -> extract the outermost bracketed region -> requote
// single-quoted strings and unquoted keys -> map Python literals -> drop
// trailing commas -> strict parse. Returns nullopt when nothing survives.
std::optional<nlohmann::json> recover_json_array(const std::string& raw);
std::optional<nlohmann::json> recover_json_object(const std::string& raw);

// Wire form of an HLMT list: array of {id, scenario, given, when, then}.
nlohmann::json hlmt_to_json(const Hlmt& h);
nlohmann::json hlmt_list_to_json(std::span<const Hlmt> hlmts);

} // namespace restmorph
