#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "restmorph/diagnostic.hpp"
#include "restmorph/errors.hpp"
#include "restmorph/mt_model.hpp"

namespace restmorph {

// The four agent prompts: propose relations, prune them against the spec,
// lower one relation to an executable plan, repair a rejected plan.
enum class PromptKind { MrGenerate, MrRefine, EmtGenerate, EmtRepair };

std::string prompt_kind_text(PromptKind k);

// Everything a template may interpolate. Rendering turns structured fields
// into text at the placeholder site.
struct PromptContext {
    std::string openapi_spec; // raw document text
    int no_tests = 0;         // how many new HLMTs to ask for
    std::string base_url;
    std::vector<Hlmt> prev_tests; // everything generated in earlier iterations
    std::vector<std::pair<std::string, std::string>> uncovered_operations; // (method, path)
    std::optional<Hlmt> hlmt;     // EmtGenerate / EmtRepair subject
    std::string candidates_json;  // MrRefine: the batch under review
    std::vector<Diagnostic> diagnostics; // EmtRepair: why the last plan failed
    std::string prev_plan;        // EmtRepair: the rejected plan (or raw text)
};

// Prompt template texts. The compiled-in set is canonical; load_dir() lets a
// user override individual templates by dropping files (mr_generate.txt,
// mr_refine.txt, emt_generate.txt, emt_repair.txt) into a directory —
// missing files fall back to the builtin text.
class TemplateSet {
public:
    static TemplateSet builtin();
    static TemplateSet load_dir(const std::string& directory); // throws IoError

    const std::string& text(PromptKind kind) const;

private:
    std::string texts_[4];
};

// Substitutes {field} placeholders in one pass. A placeholder is a brace
// token of shape {[a-z][a-z0-9_]*} not preceded by '$' (so "${binding}"
// syntax and path templates like {petId} survive verbatim). Referencing a
// field that has no value — or a name that is not a context field at all —
// throws MissingPlaceholder.
std::string render_prompt(const TemplateSet& templates, PromptKind kind,
                          const PromptContext& ctx);

} // namespace restmorph
