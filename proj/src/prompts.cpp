#include "restmorph/prompts.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace restmorph {

namespace fs = std::filesystem;

std::string prompt_kind_text(PromptKind k) {
    switch (k) {
    case PromptKind::MrGenerate: return "mr_generate";
    case PromptKind::MrRefine: return "mr_refine";
    case PromptKind::EmtGenerate: return "emt_generate";
    case PromptKind::EmtRepair: return "emt_repair";
    }
    return "mr_generate";
}

// ============================================================================
// Builtin template texts (canonical; templates/ ships the same bytes)
// ============================================================================

namespace {

const char* kMrGenerate = R"PROMPT(You are a metamorphic relation generator for REST APIs. Metamorphic testing
checks relations between the outputs of multiple related executions when exact
expected outputs are unknown. A high-level metamorphic test is a
Given-When-Then scenario:
- Given: the seed input (requests that establish a baseline observation).
- When: the follow-up input, derived from the seed by a transformation
  (modify a field, create or delete a resource, repeat a request, add a filter).
- Then: the relation the follow-up output must bear to the seed output
  (equality, difference, inclusion, exclusion, or a count change).

The service under test is described by this API specification:
{openapi_spec}

The service base URL is {base_url}.

Propose up to {no_tests} new high-level metamorphic tests. Only reference
operations documented in the specification, written as METHOD /path exactly as
the specification spells them (for example: GET /pet/findByStatus). Do not
repeat or trivially rephrase previously generated tests.

Previously generated tests:
{prev_tests}

Operations not yet exercised by any test (prefer these):
{uncovered_operations}

Respond with ONLY a JSON array of objects, each with string fields id,
scenario, given, when, then. One illustrative element:

[
  {"id": "MR1",
   "scenario": "Creating a resource increases the reported collection count by one.",
   "given": "a seed input retrieving the collection, producing a seed output with the collection count",
   "when": "the follow-up input creates one new resource and retrieves the collection again, producing a follow-up output",
   "then": "the follow-up output count exceeds the seed output count by exactly one"}
]
)PROMPT";

const char* kMrRefine = R"PROMPT(You are a metamorphic relation refiner. Review the candidate high-level
metamorphic tests below against the API specification. Keep a candidate only
when every operation, parameter, and behavior it relies on is documented in
the specification; drop candidates that are unsupported, self-contradictory,
or not checkable through the documented API. You may reword the scenario,
given, when, and then texts of surviving candidates for precision, but you
must keep each candidate's id unchanged and must not invent new candidates.

API specification:
{openapi_spec}

Candidate tests:
{candidates}

Respond with ONLY a JSON array holding the surviving objects, each with string
fields id, scenario, given, when, then.
)PROMPT";

const char* kEmtGenerate = R"PROMPT(You are a test generator that lowers one high-level metamorphic test into an
executable test plan. The plan is a declarative JSON document executed by a
test runner; it is not program code.

API specification:
{openapi_spec}

Service base URL: {base_url}

High-level metamorphic test to implement:
{hlmt}

Respond with ONLY one JSON object of this shape:

{"hlmt_id": "...",
 "labels": {"given": "...", "when": "...", "then": "..."},
 "given_steps": [ ... ],
 "when_steps": [ ... ],
 "assertions": [ ... ],
 "placeholder": false}

Rules:
- labels.given, labels.when, and labels.then must reproduce the high-level
  test's given, when, and then texts verbatim, character for character.
- Every step has the shape
  {"method": "GET", "path": "/pet/findByStatus", "path_args": {}, "query": {},
   "headers": {}, "body": null, "expect_success": true, "extract": {}}.
  "path" must be a path documented in the specification, written exactly as
  the specification spells it; "path_args" supplies a value for every brace
  placeholder appearing in it.
- "extract" captures values from the step's response for later use: each entry
  maps a binding name to a slash-delimited path into the response body, for
  example "status", "items/0/id", or "items/#count" for an array's length;
  prefix the path with "headers/" to read a response header instead.
- Later steps and assertions reference captured values as "${name}".
- given_steps perform the seed requests and capture the seed observation;
  when_steps perform the follow-up requests and capture the follow-up
  observation. Each list needs at least one step.
- assertions state the metamorphic relation over captured values, each shaped
  {"kind": "...", "left": "${seed_value}", "right": "${follow_value}"} where
  kind is one of equality, difference, inclusion, exclusion, count-delta.
  "left" must be a "${...}" reference; "right" may be a reference or a JSON
  literal. count-delta additionally needs an integer "delta" and asserts
  left minus right equals delta.
- Steps run in order and a step with "expect_success": true fails the whole
  scenario on any non-2xx response; set it to false only when a non-2xx
  response is the expected observation.
)PROMPT";

const char* kEmtRepair = R"PROMPT(You are a test plan repairer. The JSON test plan below was produced for the
high-level metamorphic test shown, but it failed structural validation and
cannot be executed. Produce a corrected plan.

API specification:
{openapi_spec}

High-level metamorphic test:
{hlmt}

Rejected plan:
{prev_plan}

Validation diagnostics:
{diagnostics}

Respond with ONLY the corrected JSON plan object, using the same shape as
before. Keep labels.given, labels.when, and labels.then unchanged: they must
continue to reproduce the high-level test's texts verbatim. Only reference
operations documented in the specification, spelled exactly as documented,
and supply path_args for every brace placeholder in each step's path.
)PROMPT";

const char* builtin_text(PromptKind k) {
    switch (k) {
    case PromptKind::MrGenerate: return kMrGenerate;
    case PromptKind::MrRefine: return kMrRefine;
    case PromptKind::EmtGenerate: return kEmtGenerate;
    case PromptKind::EmtRepair: return kEmtRepair;
    }
    return kMrGenerate;
}

constexpr PromptKind kAllKinds[] = {PromptKind::MrGenerate, PromptKind::MrRefine,
                                    PromptKind::EmtGenerate, PromptKind::EmtRepair};

} // namespace

TemplateSet TemplateSet::builtin() {
    TemplateSet set;
    for (PromptKind k : kAllKinds) set.texts_[static_cast<int>(k)] = builtin_text(k);
    return set;
}

TemplateSet TemplateSet::load_dir(const std::string& directory) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        throw IoError("template directory not found: " + directory);
    }
    TemplateSet set = builtin();
    for (PromptKind k : kAllKinds) {
        const fs::path file = fs::path(directory) / (prompt_kind_text(k) + ".txt");
        if (!fs::is_regular_file(file, ec)) continue; // builtin fallback
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read template: " + file.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        set.texts_[static_cast<int>(k)] = buf.str();
    }
    return set;
}

const std::string& TemplateSet::text(PromptKind kind) const {
    return texts_[static_cast<int>(kind)];
}

// ============================================================================
// Rendering
// ============================================================================

namespace {

std::optional<std::string> field_value(const std::string& name, const PromptContext& ctx) {
    if (name == "openapi_spec") {
        if (ctx.openapi_spec.empty()) return std::nullopt;
        return ctx.openapi_spec;
    }
    if (name == "no_tests") {
        if (ctx.no_tests <= 0) return std::nullopt;
        return std::to_string(ctx.no_tests);
    }
    if (name == "base_url") {
        if (ctx.base_url.empty()) return std::nullopt;
        return ctx.base_url;
    }
    if (name == "prev_tests") return hlmt_list_to_json(ctx.prev_tests).dump(2);
    if (name == "uncovered_operations") {
        if (ctx.uncovered_operations.empty()) return "(none)";
        std::string out;
        for (const auto& [method, path] : ctx.uncovered_operations) {
            if (!out.empty()) out += "\n";
            out += "- " + method + " " + path;
        }
        return out;
    }
    if (name == "hlmt") {
        if (!ctx.hlmt) return std::nullopt;
        return hlmt_to_json(*ctx.hlmt).dump(2);
    }
    if (name == "candidates") {
        if (ctx.candidates_json.empty()) return std::nullopt;
        return ctx.candidates_json;
    }
    if (name == "diagnostics") {
        if (ctx.diagnostics.empty()) return "(none)";
        std::string out;
        for (const auto& d : ctx.diagnostics) {
            if (!out.empty()) out += "\n";
            out += "- " + d.str();
        }
        return out;
    }
    if (name == "prev_plan") {
        if (ctx.prev_plan.empty()) return std::nullopt;
        return ctx.prev_plan;
    }
    return std::nullopt; // not a context field at all
}

const std::set<std::string>& known_fields() {
    static const std::set<std::string> names{
        "openapi_spec", "no_tests",  "base_url",    "prev_tests", "uncovered_operations",
        "hlmt",         "candidates", "diagnostics", "prev_plan"};
    return names;
}

} // namespace

std::string render_prompt(const TemplateSet& templates, PromptKind kind,
                          const PromptContext& ctx) {
    const std::string& tmpl = templates.text(kind);
    std::string out;
    out.reserve(tmpl.size() + 1024);
    for (size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        // A placeholder is {name} with name in [a-z][a-z0-9_]*, and the brace
        // not preceded by '$' — "${binding}" syntax passes through verbatim.
        if (c != '{' || (i > 0 && tmpl[i - 1] == '$')) {
            out.push_back(c);
            continue;
        }
        size_t j = i + 1;
        if (j >= tmpl.size() || !std::islower(static_cast<unsigned char>(tmpl[j]))) {
            out.push_back(c);
            continue;
        }
        while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) ||
                                   std::isdigit(static_cast<unsigned char>(tmpl[j])) ||
                                   tmpl[j] == '_')) {
            ++j;
        }
        if (j >= tmpl.size() || tmpl[j] != '}') {
            out.push_back(c);
            continue;
        }
        const std::string name = tmpl.substr(i + 1, j - i - 1);
        if (!known_fields().count(name)) {
            throw MissingPlaceholder("template for " + prompt_kind_text(kind) +
                                     " references unknown field '" + name + "'");
        }
        auto value = field_value(name, ctx);
        if (!value) {
            throw MissingPlaceholder("no value for placeholder '" + name + "' in " +
                                     prompt_kind_text(kind) + " template");
        }
        out += *value;
        i = j;
    }
    return out;
}

} // namespace restmorph
