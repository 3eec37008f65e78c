#include "restmorph/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "restmorph/agents.hpp"
#include "restmorph/errors.hpp"
#include "restmorph/executor.hpp"
#include "restmorph/llm_client.hpp"
#include "restmorph/reporting.hpp"
#include "restmorph/session.hpp"
#include "restmorph/spec_model.hpp"

namespace restmorph {

namespace fs = std::filesystem;
using nlohmann::json;

// ============================================================================
// Helpers
// ============================================================================

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string default_session_id() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &t);
#else
    gmtime_r(&t, &tm);
#endif
    std::ostringstream id;
    id << "session-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return id.str();
}

std::pair<std::string, std::string> parse_header(const std::string& raw) {
    const size_t colon = raw.find(':');
    if (colon == std::string::npos || colon == 0) {
        throw FatalConfigError("--header expects 'Name: value', got: " + raw);
    }
    std::string name = raw.substr(0, colon);
    std::string value = raw.substr(colon + 1);
    auto trim = [](std::string& s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(name);
    trim(value);
    if (name.empty()) throw FatalConfigError("--header has an empty name: " + raw);
    return {name, value};
}

// Precedence: built-in defaults < config file < individual flags. The
// effective base URL additionally falls back to the document's own servers
// entry when neither flag nor file supplies one.
SessionConfig build_config(const CliInvocation& inv, const ApiSpecification& spec) {
    SessionConfig config;
    if (!inv.config_path.empty()) {
        std::string text;
        try {
            text = read_input(inv.config_path);
        } catch (const IoError& e) {
            throw FatalConfigError(std::string("config file: ") + e.what());
        }
        json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) {
            throw FatalConfigError("config file is not valid JSON: " + inv.config_path);
        }
        config = config_from_json(j);
    }
    if (!inv.base_url.empty()) config.base_url = inv.base_url;
    if (config.base_url.empty()) config.base_url = spec.base_url;
    if (config.base_url.empty()) {
        throw FatalConfigError(
            "no base URL: pass --base-url, set it in the config file, or use a "
            "document that declares one");
    }
    if (inv.coverage_target) config.target_coverage = *inv.coverage_target;
    if (inv.plateau) config.plateau_window = *inv.plateau;
    if (inv.request_budget) config.request_budget = *inv.request_budget;
    if (inv.time_budget_seconds) config.time_budget = std::chrono::seconds(*inv.time_budget_seconds);
    if (inv.batch) config.batch_bound = *inv.batch;
    if (inv.repair_attempts) config.repair_max_attempts = *inv.repair_attempts;
    if (inv.timeout_ms) config.per_request_timeout = std::chrono::milliseconds(*inv.timeout_ms);
    if (!inv.headers.empty()) {
        config.static_headers.clear();
        for (const auto& raw : inv.headers) config.static_headers.push_back(parse_header(raw));
    }
    for (const auto& role : SessionConfig::roles()) {
        auto [it, inserted] = config.agents.try_emplace(role);
        if (inserted) it->second.role_name = role;
        if (!inv.model_id.empty()) it->second.model_id = inv.model_id;
        if (inv.temperature) it->second.temperature = *inv.temperature;
    }
    validate_config(config);
    return config;
}

ClientFactory make_client_factory(const CliInvocation& inv, const SessionConfig& config) {
    if (inv.llm_spec.rfind("scripted:", 0) == 0) {
        const std::string dir = inv.llm_spec.substr(9);
        if (dir.empty()) throw FatalConfigError("--llm scripted: needs a directory");
        std::shared_ptr<LlmClient> shared;
        try {
            shared = std::make_shared<ScriptedLlmClient>(dir);
        } catch (const IoError& e) {
            throw FatalConfigError(std::string("scripted responses: ") + e.what());
        }
        return [shared](const std::string&) { return shared; };
    }
    if (inv.llm_spec == "http") {
        HttpLlmOptions options;
        if (!inv.endpoint.empty()) options.endpoint = inv.endpoint;
        auto agents = config.agents;
        return [agents, options](const std::string& role) -> std::shared_ptr<LlmClient> {
            auto it = agents.find(role);
            AgentConfig ac = it != agents.end() ? it->second : AgentConfig{};
            if (ac.role_name.empty()) ac.role_name = role;
            return std::make_shared<HttpLlmClient>(std::move(ac), options);
        };
    }
    throw FatalConfigError("--llm must be scripted:<dir> or http, got: " + inv.llm_spec);
}

std::string fixed1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

ExecutionOptions replay_exec_options(const CliInvocation& inv, const std::string& base_url,
                                     long long budget_remaining) {
    ExecutionOptions eo;
    eo.base_url = base_url;
    eo.budget_remaining = budget_remaining;
    if (inv.timeout_ms) eo.per_request_timeout = std::chrono::milliseconds(*inv.timeout_ms);
    for (const auto& raw : inv.headers) eo.static_headers.push_back(parse_header(raw));
    return eo;
}

// ============================================================================
// Subcommands
// ============================================================================

int do_validate_spec(const CliInvocation& inv, std::ostream& out) {
    const ApiSpecification spec = parse_spec(read_input(inv.spec_path));
    out << "title:      " << spec.title << "\n";
    out << "version:    " << spec.version << "\n";
    if (!spec.base_url.empty()) out << "base url:   " << spec.base_url << "\n";
    out << "operations: " << spec.operations.size() << "\n";
    for (const auto& op : list_operations(spec)) out << "  " << op.key() << "\n";
    return 0;
}

int do_run(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    if (inv.llm_spec.empty()) {
        throw FatalConfigError("run needs --llm scripted:<dir> or --llm http");
    }
    const ApiSpecification spec = parse_spec(read_input(inv.spec_path));
    const SessionConfig config = build_config(inv, spec);
    const ClientFactory factory = make_client_factory(inv, config);

    RunOptions options;
    options.session_id = inv.session_id.empty() ? default_session_id() : inv.session_id;
    if (!inv.templates_dir.empty()) {
        try {
            options.templates = TemplateSet::load_dir(inv.templates_dir);
        } catch (const IoError& e) {
            throw FatalConfigError(std::string("--templates: ") + e.what());
        }
    }
    options.on_progress = [&err](const std::string& line) { err << line << "\n"; };

    const SessionReport report = run_session(spec, config, factory, options);
    const auto manifest = persist_session(report, inv.output_dir);

    long long requests = 0;
    for (const auto& it : report.iterations) requests += it.requests_spent;
    out << "session " << report.session_id << ": stop=" << report.stop_reason
        << " iterations=" << report.iterations.size()
        << " coverage=" << fixed1(report.totals.coverage_percent) << "%"
        << " requests=" << requests << " hlmts=" << report.totals.hlmt_count
        << " emts=" << report.totals.emt_count << " passed=" << report.totals.passed
        << " failed=" << report.totals.failed
        << " placeholders=" << report.totals.placeholder_count << "\n";
    out << "artifacts: " << (fs::path(inv.output_dir) / report.session_id).string() << " ("
        << manifest.size() << " files)\n";

    if (inv.fail_on_findings && report.totals.failed > 0) return 1;
    return 0;
}

int do_replay(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const ApiSpecification spec = parse_spec(read_input(inv.spec_path));
    std::string base_url = inv.base_url.empty() ? spec.base_url : inv.base_url;
    if (base_url.empty()) throw FatalConfigError("replay needs --base-url");
    if (inv.session_id.empty()) throw FatalConfigError("replay needs --session-id");

    const fs::path session_dir = fs::path(inv.output_dir) / inv.session_id;
    const fs::path plans_dir = session_dir / "plans";
    std::vector<fs::path> plan_files;
    std::error_code ec;
    for (fs::directory_iterator it(plans_dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->path().extension() == ".json") plan_files.push_back(it->path());
    }
    if (ec || plan_files.empty()) {
        err << "no plans under " << plans_dir.string() << "\n";
        return 3;
    }
    std::sort(plan_files.begin(), plan_files.end());

    long long budget = inv.request_budget.value_or(1000);
    int passed = 0, failed = 0, placeholders = 0;
    std::string jsonl;
    for (const auto& file : plan_files) {
        json j = json::parse(read_input(file.string()), nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) throw IoError("plan file is not valid JSON: " + file.string());
        EmtPlan plan;
        try {
            plan = plan_from_json(j);
        } catch (const PlanParseError& e) {
            throw IoError("plan file " + file.string() + ": " + e.what());
        }
        // Recover the iteration index from "iter_NN_<id>.json".
        int iteration = 0;
        const std::string name = file.filename().string();
        if (name.rfind("iter_", 0) == 0) iteration = std::atoi(name.c_str() + 5);

        ScenarioResult result = execute_scenario(plan, spec, replay_exec_options(inv, base_url, budget));
        result.iteration_index = iteration;
        budget -= result.requests_spent;
        switch (result.verdict) {
        case Verdict::Passed: ++passed; break;
        case Verdict::Failed: ++failed; break;
        case Verdict::FailedPlaceholder: ++placeholders; break;
        }
        jsonl += scenario_result_to_json(result).dump() + "\n";
    }

    std::ofstream results(session_dir / "results.jsonl", std::ios::binary | std::ios::trunc);
    if (!results) throw IoError("cannot write: " + (session_dir / "results.jsonl").string());
    results << jsonl;

    out << "replayed " << plan_files.size() << " plans: passed=" << passed
        << " failed=" << failed << " placeholders=" << placeholders << "\n";
    if (inv.fail_on_findings && failed > 0) return 1;
    return 0;
}

int do_diff_seq(const CliInvocation& inv, std::ostream& out) {
    auto load = [](const std::string& path) {
        json j = json::parse(read_input(path), nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) throw IoError("not valid JSON: " + path);
        return sequences_from_json(j);
    };
    const std::vector<Sequence> ours = load(inv.seq_ours);
    const std::vector<Sequence> baseline = load(inv.seq_baseline);
    const std::vector<Sequence> fresh = diff_sequences(ours, baseline);
    for (const auto& s : fresh) out << "+ " << s.key() << "\n";
    out << "new sequences: " << fresh.size() << " (ours " << ours.size() << ", baseline "
        << baseline.size() << ")\n";
    if (inv.fail_on_findings && !fresh.empty()) return 1;
    return 0;
}

} // namespace

// ============================================================================
// Entry points
// ============================================================================

int run_invocation(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    try {
        if (inv.subcommand == "run") return do_run(inv, out, err);
        if (inv.subcommand == "validate-spec") return do_validate_spec(inv, out);
        if (inv.subcommand == "replay") return do_replay(inv, out, err);
        if (inv.subcommand == "diff-seq") return do_diff_seq(inv, out);
        err << "unknown subcommand: " << inv.subcommand << "\n";
        return 2;
    } catch (const FatalConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnparseableDocument& e) {
        err << "spec error: " << e.what() << "\n";
        return 3;
    } catch (const UnsupportedVersion& e) {
        err << "spec error: " << e.what() << "\n";
        return 3;
    } catch (const SchemaViolation& e) {
        err << "spec error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return 3;
    } catch (const EngineError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliInvocation inv;
    CLI::App app{"Metamorphic REST API testing engine"};
    app.require_subcommand(1);

    auto add_spec = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--spec", inv.spec_path,
                                    "API document (OpenAPI 3.0 / Swagger 2.0, JSON or YAML); "
                                    "'-' reads stdin");
        if (required) opt->required();
    };
    auto add_exec_flags = [&](CLI::App* cmd) {
        cmd->add_option("--base-url", inv.base_url, "Base URL of the service under test");
        cmd->add_option("--timeout", inv.timeout_ms, "Per-request timeout (ms)");
        cmd->add_option("--header", inv.headers, "Static request header 'Name: value' (repeatable)");
        cmd->add_flag("--fail-on-findings", inv.fail_on_findings,
                      "Exit 1 when the command surfaces findings");
    };

    CLI::App* run = app.add_subcommand("run", "Run a full generation/execution session");
    add_spec(run, true);
    add_exec_flags(run);
    run->add_option("--config", inv.config_path, "JSON config file (flags override it)");
    run->add_option("--out", inv.output_dir, "Artifact output directory");
    run->add_option("--session-id", inv.session_id, "Session identifier (default: timestamp)");
    run->add_option("--llm", inv.llm_spec, "LLM transport: scripted:<dir> or http");
    run->add_option("--endpoint", inv.endpoint, "Chat-completions endpoint (http mode)");
    run->add_option("--model", inv.model_id, "Model id for every agent role");
    run->add_option("--temperature", inv.temperature, "Sampling temperature for every agent role");
    run->add_option("--batch", inv.batch, "HLMTs requested per iteration");
    run->add_option("--coverage-target", inv.coverage_target, "Stop at this coverage percent");
    run->add_option("--plateau", inv.plateau, "Fruitless iterations before stopping");
    run->add_option("--request-budget", inv.request_budget, "Total HTTP request budget");
    run->add_option("--time-budget", inv.time_budget_seconds, "Session time budget (seconds)");
    run->add_option("--repair-attempts", inv.repair_attempts, "Plan repair round-trips per scenario");
    run->add_option("--templates", inv.templates_dir, "Prompt template override directory");

    CLI::App* validate = app.add_subcommand("validate-spec", "Parse a document and list its operations");
    add_spec(validate, true);

    CLI::App* replay = app.add_subcommand("replay", "Re-execute a session's stored plans");
    add_spec(replay, true);
    add_exec_flags(replay);
    replay->add_option("--out", inv.output_dir, "Artifact directory the session lives under");
    replay->add_option("--session-id", inv.session_id, "Session whose plans to replay")->required();
    replay->add_option("--request-budget", inv.request_budget, "Total HTTP request budget");

    CLI::App* diff = app.add_subcommand("diff-seq", "Sequences in OURS that BASELINE lacks");
    diff->add_option("ours", inv.seq_ours, "Sequence file to inspect")->required();
    diff->add_option("baseline", inv.seq_baseline, "Baseline sequence file")->required();
    diff->add_flag("--fail-on-findings", inv.fail_on_findings,
                   "Exit 1 when any new sequence exists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 2;
    }
    inv.subcommand = app.get_subcommands().front()->get_name();
    return run_invocation(inv, out, err);
}

} // namespace restmorph
