#pragma once

#include <string>
#include <vector>

#include "restmorph/emt_plan.hpp"
#include "restmorph/llm_client.hpp"
#include "restmorph/mt_model.hpp"
#include "restmorph/prompts.hpp"
#include "restmorph/spec_model.hpp"

namespace restmorph {

// How many repair round-trips the code-refiner agent may spend on one plan.
struct RepairBudget {
    int max_attempts = 2;
};

struct GenerationOutcome {
    std::vector<Hlmt> hlmts;
    std::vector<std::string> diagnostics; // dropped elements, truncation notes
    bool truncated = false;               // batch bound trimmed the list
};

// MR Generator: asks for up to `batch_bound` new HLMTs and parses the reply
// leniently. Oversized replies are truncated to the bound with a diagnostic.
// Throws NoArrayFound / LlmTransportError (callers decide how to degrade).
GenerationOutcome generate_hlmts(LlmClient& client, const TemplateSet& templates,
                                 const PromptContext& ctx, int batch_bound,
                                 int iteration_index);

struct RefineOutcome {
    std::vector<Hlmt> kept;
    std::vector<std::string> dropped; // one line per rejected candidate
    bool degraded = false; // LLM pass skipped (transport/parse trouble)
};

// MR Refiner: the LLM may drop candidates and reword surviving texts (ids
// must be stable); a local filter then authoritatively rejects any candidate
// whose texts mention an operation the spec does not document. On transport
// or parse trouble the LLM pass is skipped and the local filter alone runs.
RefineOutcome refine_hlmts(LlmClient& client, const TemplateSet& templates,
                           const ApiSpecification& spec, const std::vector<Hlmt>& candidates);

// Test Generator: lowers one HLMT to a plan. The plan's labels must mirror
// the HLMT's given/when/then texts verbatim. Throws PlanParseError (bad or
// mislabeled output) / LlmTransportError.
EmtPlan generate_emt(LlmClient& client, const TemplateSet& templates, const Hlmt& hlmt,
                     const ApiSpecification& spec, const std::string& base_url);

struct LoweringOutcome {
    EmtPlan plan;
    int attempts_used = 0; // repair round-trips consumed (0 = first try ok)
    std::vector<std::string> log; // diagnostics from failed attempts
};

// Code Refiner loop: generate, validate, and re-prompt with diagnostics up to
// budget.max_attempts times. Exhaustion degrades to a placeholder plan rather
// than raising — the scenario is reported, not silently dropped.
LoweringOutcome lower_with_repair(LlmClient& generator, LlmClient& refiner,
                                  const TemplateSet& templates, const Hlmt& hlmt,
                                  const ApiSpecification& spec, const std::string& base_url,
                                  RepairBudget budget);

} // namespace restmorph
