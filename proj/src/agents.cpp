#include "restmorph/agents.hpp"

#include <algorithm>
#include <map>
#include <regex>

namespace restmorph {

using nlohmann::json;

// ============================================================================
// MR Generator
// ============================================================================

GenerationOutcome generate_hlmts(LlmClient& client, const TemplateSet& templates,
                                 const PromptContext& ctx, int batch_bound,
                                 int iteration_index) {
    const std::string raw = client.complete(render_prompt(templates, PromptKind::MrGenerate, ctx));
    HlmtParse parsed = parse_hlmt_list(raw, iteration_index);

    GenerationOutcome out;
    out.hlmts = std::move(parsed.hlmts);
    for (auto& line : parsed.dropped) out.diagnostics.push_back("generator: " + line);
    if (batch_bound > 0 && out.hlmts.size() > static_cast<size_t>(batch_bound)) {
        out.diagnostics.push_back("generator returned " + std::to_string(out.hlmts.size()) +
                                  " candidates; truncated to batch bound " +
                                  std::to_string(batch_bound));
        out.hlmts.resize(static_cast<size_t>(batch_bound));
        out.truncated = true;
    }
    return out;
}

// ============================================================================
// MR Refiner
// ============================================================================

namespace {

// Finds "METHOD /path" mentions in scenario prose. Trailing sentence
// punctuation is trimmed from the path.
std::vector<std::pair<std::string, std::string>> operation_mentions(const std::string& text) {
    static const std::regex mention_re(
        R"(\b(GET|POST|PUT|PATCH|DELETE|HEAD|OPTIONS)\s+(/[A-Za-z0-9_\-{}/.]*))",
        std::regex_constants::icase);
    std::vector<std::pair<std::string, std::string>> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), mention_re);
         it != std::sregex_iterator(); ++it) {
        std::string method = (*it)[1].str();
        std::transform(method.begin(), method.end(), method.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        std::string path = (*it)[2].str();
        while (!path.empty() && (path.back() == '.' || path.back() == '/')) {
            if (path.size() == 1) break; // keep a bare "/"
            path.pop_back();
        }
        out.emplace_back(std::move(method), std::move(path));
    }
    return out;
}

// A mention resolves when some documented operation of that method has the
// same segment shape — placeholder spellings and concrete values both match.
bool mention_resolves(const ApiSpecification& spec, const std::string& method,
                      const std::string& path) {
    auto m = parse_method(method);
    if (!m) return false;
    return std::any_of(spec.operations.begin(), spec.operations.end(), [&](const Operation& op) {
        return op.method == *m && template_shape_matches(op.path_template, path);
    });
}

} // namespace

RefineOutcome refine_hlmts(LlmClient& client, const TemplateSet& templates,
                           const ApiSpecification& spec, const std::vector<Hlmt>& candidates) {
    RefineOutcome out;
    std::vector<Hlmt> working;

    // Advisory LLM pass: may reject candidates and reword survivors, keyed by
    // stable id. Invented ids are ignored. Any trouble degrades to the local
    // filter alone — refinement must never sink an iteration.
    try {
        PromptContext ctx;
        ctx.openapi_spec = spec.raw_text;
        ctx.candidates_json = hlmt_list_to_json(candidates).dump(2);
        const std::string raw =
            client.complete(render_prompt(templates, PromptKind::MrRefine, ctx));
        HlmtParse parsed = parse_hlmt_list(raw);
        std::map<std::string, const Hlmt*> by_id;
        for (const auto& h : parsed.hlmts) by_id.emplace(h.id, &h);
        for (const auto& cand : candidates) {
            auto it = by_id.find(cand.id);
            if (it == by_id.end()) {
                out.dropped.push_back("candidate " + cand.id + ": rejected by refiner");
                continue;
            }
            const Hlmt& r = *it->second;
            working.push_back(make_hlmt(cand.id, r.scenario_title, r.given_text, r.when_text,
                                        r.then_text, cand.iteration_index));
        }
    } catch (const NoArrayFound&) {
        out.degraded = true;
        out.dropped.push_back("refiner output unusable; applying local filter only");
        working = candidates;
    } catch (const LlmTransportError& e) {
        out.degraded = true;
        out.dropped.push_back(std::string("refiner unreachable (") + e.what() +
                              "); applying local filter only");
        working = candidates;
    }

    // Authoritative local filter: every operation mention must resolve
    // against the parsed specification.
    for (auto& h : working) {
        const std::string all_text =
            h.scenario_title + "\n" + h.given_text + "\n" + h.when_text + "\n" + h.then_text;
        std::string offending;
        for (const auto& [method, path] : operation_mentions(all_text)) {
            if (!mention_resolves(spec, method, path)) {
                offending = method + " " + path;
                break;
            }
        }
        if (offending.empty()) {
            out.kept.push_back(std::move(h));
        } else {
            out.dropped.push_back("candidate " + h.id + ": mentions undocumented operation '" +
                                  offending + "'");
        }
    }
    return out;
}

// ============================================================================
// Test Generator + Code Refiner repair loop
// ============================================================================

namespace {

struct Attempt {
    std::optional<EmtPlan> plan;
    std::string raw; // the completion text, for repair prompts
    std::vector<Diagnostic> problems;
};

Attempt try_lower(LlmClient& client, const TemplateSet& templates, PromptKind kind,
                  const PromptContext& ctx, const Hlmt& hlmt) {
    Attempt a;
    try {
        a.raw = client.complete(render_prompt(templates, kind, ctx));
    } catch (const LlmTransportError& e) {
        a.problems.push_back({"transport", e.what()});
        return a;
    }
    EmtPlan plan;
    try {
        plan = plan_from_text(a.raw);
    } catch (const PlanParseError& e) {
        a.problems.push_back({"plan", e.what()});
        return a;
    }
    if (plan.given_label != hlmt.given_text || plan.when_label != hlmt.when_text ||
        plan.then_label != hlmt.then_text) {
        a.problems.push_back(
            {"labels", "labels must reproduce the scenario's given/when/then texts verbatim"});
        return a;
    }
    plan.hlmt_id = hlmt.id; // the engine knows which HLMT it lowered; fix echoes
    a.plan = std::move(plan);
    return a;
}

} // namespace

EmtPlan generate_emt(LlmClient& client, const TemplateSet& templates, const Hlmt& hlmt,
                     const ApiSpecification& spec, const std::string& base_url) {
    PromptContext ctx;
    ctx.openapi_spec = spec.raw_text;
    ctx.base_url = base_url;
    ctx.hlmt = hlmt;
    const std::string raw = client.complete(render_prompt(templates, PromptKind::EmtGenerate, ctx));
    EmtPlan plan = plan_from_text(raw); // throws PlanParseError
    if (plan.given_label != hlmt.given_text || plan.when_label != hlmt.when_text ||
        plan.then_label != hlmt.then_text) {
        throw PlanParseError("plan labels do not reproduce the scenario texts verbatim");
    }
    plan.hlmt_id = hlmt.id;
    return plan;
}

LoweringOutcome lower_with_repair(LlmClient& generator, LlmClient& refiner,
                                  const TemplateSet& templates, const Hlmt& hlmt,
                                  const ApiSpecification& spec, const std::string& base_url,
                                  RepairBudget budget) {
    LoweringOutcome out;

    PromptContext gen_ctx;
    gen_ctx.openapi_spec = spec.raw_text;
    gen_ctx.base_url = base_url;
    gen_ctx.hlmt = hlmt;
    Attempt attempt = try_lower(generator, templates, PromptKind::EmtGenerate, gen_ctx, hlmt);

    while (true) {
        std::vector<Diagnostic> problems;
        if (attempt.plan) {
            problems = validate_plan(*attempt.plan, spec);
            if (problems.empty()) {
                out.plan = std::move(*attempt.plan);
                return out;
            }
        } else {
            problems = attempt.problems;
        }
        for (const auto& d : problems) {
            out.log.push_back("attempt " + std::to_string(out.attempts_used) + ": " + d.str());
        }
        if (out.attempts_used >= budget.max_attempts) {
            out.log.push_back("repair budget exhausted; degrading to placeholder plan");
            out.plan = make_placeholder(hlmt);
            return out;
        }
        ++out.attempts_used;

        PromptContext repair_ctx;
        repair_ctx.openapi_spec = spec.raw_text;
        repair_ctx.hlmt = hlmt;
        repair_ctx.diagnostics = problems;
        if (attempt.plan) {
            repair_ctx.prev_plan = plan_to_json(*attempt.plan).dump(2);
        } else if (!attempt.raw.empty()) {
            repair_ctx.prev_plan = attempt.raw;
        } else {
            repair_ctx.prev_plan = "(no output was produced)";
        }
        attempt = try_lower(refiner, templates, PromptKind::EmtRepair, repair_ctx, hlmt);
    }
}

} // namespace restmorph
