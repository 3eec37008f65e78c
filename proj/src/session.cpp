#include "restmorph/session.hpp"

#include <algorithm>

namespace restmorph {

using nlohmann::json;

// ============================================================================
// Configuration
// ============================================================================

const std::vector<std::string>& SessionConfig::roles() {
    static const std::vector<std::string> names{"mr_generator", "mr_refiner", "test_generator",
                                                "code_refiner"};
    return names;
}

void validate_config(const SessionConfig& config) {
    if (!(config.target_coverage > 0.0) || config.target_coverage > 100.0) {
        throw FatalConfigError("target_coverage must be in (0, 100]");
    }
    if (config.plateau_window <= 0) throw FatalConfigError("plateau_window must be positive");
    if (config.request_budget <= 0) throw FatalConfigError("request_budget must be positive");
    if (config.time_budget.count() <= 0) throw FatalConfigError("time_budget must be positive");
    if (config.batch_bound <= 0) throw FatalConfigError("batch_bound must be positive");
    if (config.repair_max_attempts < 0) {
        throw FatalConfigError("repair_max_attempts must be non-negative");
    }
    if (config.per_request_timeout.count() <= 0) {
        throw FatalConfigError("per_request_timeout must be positive");
    }
}

SessionConfig config_from_json(const json& j) {
    if (!j.is_object()) throw FatalConfigError("config must be a JSON object");
    SessionConfig config;
    static const std::set<std::string> known{
        "base_url",       "target_coverage",     "plateau_window",
        "request_budget", "time_budget_seconds", "batch_bound",
        "repair_max_attempts", "per_request_timeout_ms", "agents", "static_headers"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw FatalConfigError("unknown config key '" + key + "'");
    }
    try {
        if (j.contains("base_url")) config.base_url = j["base_url"].get<std::string>();
        if (j.contains("target_coverage")) {
            config.target_coverage = j["target_coverage"].get<double>();
        }
        if (j.contains("plateau_window")) config.plateau_window = j["plateau_window"].get<int>();
        if (j.contains("request_budget")) {
            config.request_budget = j["request_budget"].get<long long>();
        }
        if (j.contains("time_budget_seconds")) {
            config.time_budget = std::chrono::seconds(j["time_budget_seconds"].get<long long>());
        }
        if (j.contains("batch_bound")) config.batch_bound = j["batch_bound"].get<int>();
        if (j.contains("repair_max_attempts")) {
            config.repair_max_attempts = j["repair_max_attempts"].get<int>();
        }
        if (j.contains("per_request_timeout_ms")) {
            config.per_request_timeout =
                std::chrono::milliseconds(j["per_request_timeout_ms"].get<long long>());
        }
        if (j.contains("static_headers")) {
            if (!j["static_headers"].is_object()) {
                throw FatalConfigError("static_headers must be an object");
            }
            for (const auto& [name, value] : j["static_headers"].items()) {
                config.static_headers.emplace_back(name, value.get<std::string>());
            }
        }
        if (j.contains("agents")) {
            if (!j["agents"].is_object()) throw FatalConfigError("agents must be an object");
            for (const auto& [role, a] : j["agents"].items()) {
                AgentConfig ac;
                ac.role_name = role;
                if (a.contains("model_id")) ac.model_id = a["model_id"].get<std::string>();
                if (a.contains("temperature")) ac.temperature = a["temperature"].get<double>();
                if (a.contains("seed")) ac.seed = a["seed"].get<int>();
                if (a.contains("max_output_tokens")) {
                    ac.max_output_tokens = a["max_output_tokens"].get<int>();
                }
                config.agents[role] = std::move(ac);
            }
        }
    } catch (const json::exception& e) {
        throw FatalConfigError(std::string("malformed config value: ") + e.what());
    }
    return config;
}

json config_to_json(const SessionConfig& config) {
    json j;
    j["base_url"] = config.base_url;
    j["target_coverage"] = config.target_coverage;
    j["plateau_window"] = config.plateau_window;
    j["request_budget"] = config.request_budget;
    j["time_budget_seconds"] = config.time_budget.count();
    j["batch_bound"] = config.batch_bound;
    j["repair_max_attempts"] = config.repair_max_attempts;
    j["per_request_timeout_ms"] = config.per_request_timeout.count();
    j["static_headers"] = json::object();
    for (const auto& [name, value] : config.static_headers) j["static_headers"][name] = value;
    j["agents"] = json::object();
    for (const auto& [role, a] : config.agents) {
        json aj{{"model_id", a.model_id},
                {"temperature", a.temperature},
                {"max_output_tokens", a.max_output_tokens}};
        if (a.seed) aj["seed"] = *a.seed;
        j["agents"][role] = std::move(aj);
    }
    return j;
}

// ============================================================================
// Stopping criteria and coverage
// ============================================================================

StopDecision should_stop(const SessionState& state, const SessionConfig& config,
                         std::chrono::steady_clock::time_point now) {
    if (now - state.started_at >= config.time_budget) return {true, "time-budget"};
    if (state.requests_spent >= config.request_budget) return {true, "request-budget"};
    if (state.total_operations > 0 && state.coverage_percent() >= config.target_coverage) {
        return {true, "coverage-target"};
    }
    if (state.plateau_counter >= config.plateau_window) return {true, "plateau"};
    return {false, ""};
}

std::vector<std::string> update_coverage(SessionState& state,
                                         std::span<const ScenarioResult> results,
                                         const ApiSpecification& spec) {
    (void)spec; // sequences are already normalized against this spec
    std::vector<std::string> fresh;
    for (const auto& r : results) {
        for (const auto& entry : r.sequence.entries) {
            if (!entry.resolved) continue;
            const std::string key = entry.method + " " + entry.path;
            if (state.covered_operations.insert(key).second) fresh.push_back(key);
        }
    }
    std::sort(fresh.begin(), fresh.end());
    return fresh;
}

// ============================================================================
// The session loop
// ============================================================================

SessionReport run_session(const ApiSpecification& spec, const SessionConfig& config,
                          const ClientFactory& clients, const RunOptions& options) {
    validate_config(config);
    if (spec.operations.empty()) {
        throw FatalConfigError("specification documents no operations; nothing to test");
    }
    if (config.base_url.empty()) throw FatalConfigError("no base URL configured");
    if (!clients) throw FatalConfigError("no LLM client factory supplied");

    auto clock = options.clock ? options.clock
                               : std::function<std::chrono::steady_clock::time_point()>(
                                     [] { return std::chrono::steady_clock::now(); });
    const TemplateSet templates = options.templates ? *options.templates : TemplateSet::builtin();

    std::map<std::string, std::shared_ptr<LlmClient>> agents;
    for (const auto& role : SessionConfig::roles()) {
        agents[role] = clients(role);
        if (!agents[role]) throw FatalConfigError("client factory returned no client for " + role);
    }

    SessionState state;
    state.total_operations = spec.operations.size();
    state.started_at = clock();

    SessionReport report;
    report.session_id = options.session_id;
    report.config_snapshot = config_to_json(config);
    report.total_operations = spec.operations.size();

    auto progress = [&](const std::string& line) {
        if (options.on_progress) options.on_progress(line);
    };

    std::vector<IterationSummary> summaries;
    while (true) {
        const StopDecision decision = should_stop(state, config, clock());
        if (decision.stop) {
            report.stop_reason = decision.reason;
            break;
        }
        const int iteration = ++state.iteration_index;
        const auto iter_t0 = clock();
        std::vector<std::string> diagnostics;

        // ---- MR Generator ----
        PromptContext gen_ctx;
        gen_ctx.openapi_spec = spec.raw_text;
        gen_ctx.no_tests = config.batch_bound;
        gen_ctx.base_url = config.base_url;
        gen_ctx.prev_tests = state.all_hlmts;
        for (const auto& op : spec.operations) {
            const std::string key = op.key();
            if (!state.covered_operations.count(key)) {
                gen_ctx.uncovered_operations.emplace_back(method_text(op.method),
                                                          op.path_template);
            }
        }
        GenerationOutcome generated;
        try {
            generated = generate_hlmts(*agents["mr_generator"], templates, gen_ctx,
                                       config.batch_bound, iteration);
        } catch (const NoArrayFound& e) {
            diagnostics.push_back(std::string("generator produced no parseable array: ") +
                                  e.what());
        } catch (const LlmTransportError& e) {
            diagnostics.push_back(std::string("generator unreachable: ") + e.what());
        }
        for (auto& d : generated.diagnostics) diagnostics.push_back(d);

        if (generated.hlmts.empty()) {
            IterationSummary summary = summarize_iteration(iteration, 0, {});
            summary.row.coverage_percent = state.coverage_percent();
            summary.row.elapsed_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(clock() - iter_t0).count();
            summary.diagnostics = std::move(diagnostics);
            summaries.push_back(std::move(summary));
            ++state.plateau_counter;
            report.stop_reason = "no-new-tests";
            progress("iteration " + std::to_string(iteration) +
                     ": generator yielded no candidates; stopping");
            break;
        }

        // ---- MR Refiner ----
        RefineOutcome refined =
            refine_hlmts(*agents["mr_refiner"], templates, spec, generated.hlmts);
        for (auto& d : refined.dropped) diagnostics.push_back(d);

        // ---- Structural gate before lowering ----
        std::vector<Hlmt> usable;
        for (const auto& h : refined.kept) {
            auto problems = validate_hlmt(h, refined.kept);
            if (problems.empty()) {
                usable.push_back(h);
            } else {
                for (const auto& p : problems) {
                    diagnostics.push_back("hlmt " + h.id + " rejected: " + p.str());
                }
            }
        }

        // ---- Lower and execute, strictly in generation order ----
        std::vector<ScenarioResult> iter_results;
        std::map<std::string, std::string> slug_of; // hlmt id -> semantic slug
        for (const auto& h : usable) {
            slug_of[h.id] = h.semantic_slug;
            LoweringOutcome lowered = lower_with_repair(
                *agents["test_generator"], *agents["code_refiner"], templates, h, spec,
                config.base_url, RepairBudget{config.repair_max_attempts});
            for (const auto& line : lowered.log) {
                diagnostics.push_back("hlmt " + h.id + " lowering: " + line);
            }
            report.plans.emplace_back(iteration, lowered.plan);

            ExecutionOptions exec;
            exec.base_url = config.base_url;
            exec.budget_remaining = config.request_budget - state.requests_spent;
            exec.per_request_timeout = config.per_request_timeout;
            exec.static_headers = config.static_headers;
            ScenarioResult result = execute_scenario(lowered.plan, spec, exec);
            result.iteration_index = iteration;
            state.requests_spent += result.requests_spent;
            iter_results.push_back(std::move(result));
        }

        // ---- Coverage, semantic novelty, plateau accounting ----
        const std::vector<std::string> new_ops = update_coverage(state, iter_results, spec);
        int new_slugs = 0;
        for (const auto& r : iter_results) {
            if (r.verdict == Verdict::FailedPlaceholder) continue;
            auto it = slug_of.find(r.hlmt_id);
            if (it == slug_of.end()) continue;
            if (state.known_slugs.insert(it->second).second) ++new_slugs;
        }
        if (new_slugs == 0 && new_ops.empty()) {
            ++state.plateau_counter;
        } else {
            state.plateau_counter = 0;
        }
        state.all_hlmts.insert(state.all_hlmts.end(), refined.kept.begin(), refined.kept.end());

        IterationSummary summary = summarize_iteration(
            iteration, static_cast<int>(generated.hlmts.size()), iter_results);
        summary.new_slug_count = new_slugs;
        summary.new_operations = new_ops;
        summary.row.coverage_percent = state.coverage_percent();
        summary.row.elapsed_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(clock() - iter_t0).count();
        summary.diagnostics = std::move(diagnostics);
        for (const auto& r : iter_results) summary.requests_spent += r.requests_spent;
        progress("iteration " + std::to_string(iteration) + ": hlmts=" +
                 std::to_string(summary.row.hlmt_count) + " emts=" +
                 std::to_string(summary.row.emt_count) + " passed=" +
                 std::to_string(summary.row.passed) + " failed=" +
                 std::to_string(summary.row.failed) + " coverage=" +
                 std::to_string(summary.row.coverage_percent) + "% requests=" +
                 std::to_string(summary.requests_spent) + " plateau=" +
                 std::to_string(state.plateau_counter));
        summaries.push_back(std::move(summary));

        for (auto& r : iter_results) report.results.push_back(std::move(r));
    }

    report.iterations = std::move(summaries);
    report.totals = aggregate_totals(report.iterations);
    report.hlmts = state.all_hlmts;
    report.semantic_groups = group_semantic(report.hlmts, report.session_id);

    // Distinct sequences, sorted by key; failures keep their own set.
    std::map<std::string, Sequence> seq_by_key, failed_by_key;
    for (const auto& r : report.results) {
        if (r.sequence.entries.empty()) continue;
        seq_by_key.emplace(r.sequence.key(), r.sequence);
        if (r.verdict == Verdict::Failed) failed_by_key.emplace(r.sequence.key(), r.sequence);
    }
    for (auto& [key, seq] : seq_by_key) report.sequences.push_back(std::move(seq));
    for (auto& [key, seq] : failed_by_key) report.failed_sequences.push_back(std::move(seq));
    return report;
}

} // namespace restmorph
