#include "restmorph/reporting.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace restmorph {

namespace fs = std::filesystem;
using nlohmann::json;

// ============================================================================
// Summaries and totals
// ============================================================================

IterationSummary summarize_iteration(int index, int hlmt_count,
                                     std::span<const ScenarioResult> results) {
    IterationSummary summary;
    summary.index = index;
    summary.row.hlmt_count = hlmt_count;
    for (const auto& r : results) {
        switch (r.verdict) {
        case Verdict::Passed:
            ++summary.row.emt_count;
            ++summary.row.passed;
            break;
        case Verdict::Failed:
            ++summary.row.emt_count;
            ++summary.row.failed;
            break;
        case Verdict::FailedPlaceholder: ++summary.row.placeholder_count; break;
        }
        if (r.failure_class) {
            ++summary.failure_class_counts[failure_kind_text(r.failure_class->kind)];
        }
    }
    return summary;
}

MetricsRow aggregate_totals(std::span<const IterationSummary> iterations) {
    MetricsRow totals;
    for (const auto& it : iterations) {
        totals.hlmt_count += it.row.hlmt_count;
        totals.emt_count += it.row.emt_count;
        totals.passed += it.row.passed;
        totals.failed += it.row.failed;
        totals.placeholder_count += it.row.placeholder_count;
        totals.elapsed_ms += it.row.elapsed_ms;
    }
    if (!iterations.empty()) totals.coverage_percent = iterations.back().row.coverage_percent;
    return totals;
}

std::vector<Sequence> diff_sequences(const std::vector<Sequence>& ours,
                                     const std::vector<Sequence>& baseline) {
    std::set<std::string> known;
    for (const auto& s : baseline) known.insert(s.key());
    std::vector<Sequence> fresh;
    for (const auto& s : ours) {
        if (!known.count(s.key())) fresh.push_back(s);
    }
    return fresh;
}

// ============================================================================
// JSON forms
// ============================================================================

json metrics_row_to_json(const MetricsRow& row) {
    return json{{"hlmt_count", row.hlmt_count},
                {"emt_count", row.emt_count},
                {"passed", row.passed},
                {"failed", row.failed},
                {"placeholder_count", row.placeholder_count},
                {"coverage_percent", row.coverage_percent},
                {"elapsed_ms", row.elapsed_ms}};
}

json iteration_summary_to_json(const IterationSummary& summary) {
    json j = metrics_row_to_json(summary.row);
    j["index"] = summary.index;
    j["new_slug_count"] = summary.new_slug_count;
    j["new_operations"] = summary.new_operations;
    j["requests_spent"] = summary.requests_spent;
    j["failure_class_counts"] = json::object();
    for (const auto& [kind, count] : summary.failure_class_counts) {
        j["failure_class_counts"][kind] = count;
    }
    j["diagnostics"] = summary.diagnostics;
    return j;
}

json scenario_result_to_json(const ScenarioResult& result) {
    json steps = json::array();
    for (const auto& so : result.step_outcomes) {
        json step{{"index", so.step_index},
                  {"phase", phase_text(so.phase)},
                  {"method", method_text(so.method)},
                  {"path", so.concrete_path},
                  {"latency_ms", so.latency_ms},
                  {"outcome", step_outcome_text(so.outcome)},
                  {"detail", so.detail}};
        if (so.status_code) step["status"] = *so.status_code;
        if (!so.body_digest.empty()) step["body_digest"] = so.body_digest;
        steps.push_back(std::move(step));
    }
    json relations = json::array();
    for (const auto& ro : result.relation_verdicts) {
        relations.push_back(
            json{{"index", ro.assertion_index}, {"holds", ro.holds}, {"reason", ro.reason}});
    }
    json seq = json::array();
    for (const auto& e : result.sequence.entries) seq.push_back(e.method + " " + e.path);
    json j{{"hlmt_id", result.hlmt_id},
           {"iteration", result.iteration_index},
           {"verdict", verdict_text(result.verdict)},
           {"requests_spent", result.requests_spent},
           {"sequence", std::move(seq)},
           {"steps", std::move(steps)},
           {"relations", std::move(relations)}};
    if (result.failure_class) {
        j["failure_class"] = json{{"kind", failure_kind_text(result.failure_class->kind)},
                                  {"detail", result.failure_class->detail}};
    }
    return j;
}

json sequences_to_json(std::span<const Sequence> sequences) {
    json arr = json::array();
    for (const auto& s : sequences) {
        json one = json::array();
        for (const auto& e : s.entries) one.push_back(e.method + " " + e.path);
        arr.push_back(std::move(one));
    }
    return arr;
}

std::vector<Sequence> sequences_from_json(const json& j) {
    if (!j.is_array()) {
        throw IoError("sequence file must be a JSON array of arrays of 'METHOD /path' strings");
    }
    std::vector<Sequence> out;
    for (const auto& one : j) {
        if (!one.is_array()) throw IoError("each sequence must be a JSON array of strings");
        Sequence seq;
        for (const auto& entry : one) {
            if (!entry.is_string()) throw IoError("sequence entries must be strings");
            const std::string text = entry.get<std::string>();
            const size_t space = text.find(' ');
            if (space == std::string::npos) {
                throw IoError("sequence entry is not 'METHOD /path': " + text);
            }
            seq.entries.push_back({text.substr(0, space), text.substr(space + 1), true});
        }
        out.push_back(std::move(seq));
    }
    return out;
}

// ============================================================================
// Persistence
// ============================================================================

namespace {

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') {
            out.push_back(c);
        } else {
            out.push_back('_');
        }
    }
    return out.empty() ? "_" : out;
}

std::string fixed1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

struct AnnotationJoin {
    bool labeled = false;
    int annotated = 0;
    int tpft = 0; // failures annotated as true-positive fault-triggering
};

// annotations.json: {"<iteration>:<hlmt_id>": "TPFT" | "TPNF" | "FPSB" | "FPTL"}
AnnotationJoin join_annotations(const fs::path& file, const SessionReport& report) {
    AnnotationJoin join;
    std::ifstream in(file, std::ios::binary);
    if (!in) return join;
    std::ostringstream buf;
    buf << in.rdbuf();
    json ann = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (ann.is_discarded() || !ann.is_object()) return join;
    join.labeled = true;
    auto normalized = [](std::string s) {
        std::string out;
        for (char c : s) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            }
        }
        return out;
    };
    for (const auto& r : report.results) {
        if (r.verdict != Verdict::Failed) continue;
        const std::string key = std::to_string(r.iteration_index) + ":" + r.hlmt_id;
        auto it = ann.find(key);
        if (it == ann.end() || !it->is_string()) continue;
        ++join.annotated;
        if (normalized(it->get<std::string>()) == "TPFT") ++join.tpft;
    }
    return join;
}

std::string render_markdown(const SessionReport& report, const AnnotationJoin& ann) {
    std::ostringstream md;
    md << "# Session " << report.session_id << "\n\n";
    md << "- Stop reason: **" << report.stop_reason << "**\n";
    const size_t covered = static_cast<size_t>(
        report.total_operations * report.totals.coverage_percent / 100.0 + 0.5);
    md << "- Coverage: " << fixed1(report.totals.coverage_percent) << "% (" << covered << "/"
       << report.total_operations << " operations)\n";
    long long requests = 0;
    for (const auto& it : report.iterations) requests += it.requests_spent;
    md << "- Requests issued: " << requests << "\n";
    md << "- HLMTs: " << report.totals.hlmt_count << " generated, " << report.semantic_groups.size()
       << " semantically unique\n";
    md << "- EMTs: " << report.totals.emt_count << " (" << report.totals.passed << " passed, "
       << report.totals.failed << " failed, " << report.totals.placeholder_count
       << " placeholders)\n\n";

    md << "## Iterations\n\n";
    md << "| # | HLMTs | EMTs | Passed | Failed | Placeholders | New slugs | Coverage % | "
          "Requests | Elapsed (ms) |\n";
    md << "|--:|--:|--:|--:|--:|--:|--:|--:|--:|--:|\n";
    for (const auto& it : report.iterations) {
        md << "| " << it.index << " | " << it.row.hlmt_count << " | " << it.row.emt_count << " | "
           << it.row.passed << " | " << it.row.failed << " | " << it.row.placeholder_count
           << " | " << it.new_slug_count << " | " << fixed1(it.row.coverage_percent) << " | "
           << it.requests_spent << " | " << it.row.elapsed_ms << " |\n";
    }
    md << "| Total | " << report.totals.hlmt_count << " | " << report.totals.emt_count << " | "
       << report.totals.passed << " | " << report.totals.failed << " | "
       << report.totals.placeholder_count << " | - | " << fixed1(report.totals.coverage_percent)
       << " | " << requests << " | " << report.totals.elapsed_ms << " |\n\n";

    std::map<std::string, int> class_totals;
    for (const auto& it : report.iterations) {
        for (const auto& [kind, count] : it.failure_class_counts) class_totals[kind] += count;
    }
    if (!class_totals.empty()) {
        md << "## Failure classes\n\n| Class | Count |\n|---|--:|\n";
        for (const auto& [kind, count] : class_totals) {
            md << "| " << kind << " | " << count << " |\n";
        }
        md << "\n";
    }

    if (!report.sequences.empty()) {
        std::set<std::string> failed_keys;
        for (const auto& s : report.failed_sequences) failed_keys.insert(s.key());
        md << "## Request sequences\n\n| Sequence | Failed |\n|---|---|\n";
        for (const auto& s : report.sequences) {
            md << "| " << s.key() << " | " << (failed_keys.count(s.key()) ? "yes" : "no")
               << " |\n";
        }
        md << "\n";
    }

    md << "## Fault annotations\n\n";
    if (ann.labeled && report.totals.failed > 0) {
        const double tpr = 100.0 * ann.tpft / report.totals.failed;
        md << "TPFT " << ann.tpft << " of " << report.totals.failed
           << " failed scenarios (TPR " << fixed1(tpr) << "%, " << ann.annotated
           << " annotated).\n";
    } else {
        md << "No annotations supplied; true-positive rate unlabeled.\n";
    }
    return md.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << bytes;
    if (!out.good()) throw IoError("write failed: " + path.string());
}

} // namespace

std::vector<std::string> persist_session(const SessionReport& report,
                                         const std::string& out_dir) {
    const fs::path root = fs::path(out_dir) / report.session_id;
    std::error_code ec;
    fs::create_directories(root / "plans", ec);
    if (ec) throw IoError("cannot create output directory: " + (root / "plans").string());

    // Assemble every artifact in memory first; the manifest (sorted relative
    // paths) is embedded in report.json, so names must be known up front.
    std::map<std::string, std::string> files;

    files["hlmts.json"] = hlmt_list_to_json(report.hlmts).dump(2) + "\n";

    for (const auto& [iteration, plan] : report.plans) {
        std::ostringstream name;
        name << "plans/iter_" << std::setw(2) << std::setfill('0') << iteration << "_"
             << sanitize_filename(plan.hlmt_id) << ".json";
        files[name.str()] = plan_to_json(plan).dump(2) + "\n";
    }

    std::string jsonl;
    for (const auto& r : report.results) jsonl += scenario_result_to_json(r).dump() + "\n";
    files["results.jsonl"] = jsonl;

    std::set<std::string> covered;
    json trajectory = json::array();
    for (const auto& it : report.iterations) {
        covered.insert(it.new_operations.begin(), it.new_operations.end());
        trajectory.push_back(json{{"iteration", it.index},
                                  {"coverage_percent", it.row.coverage_percent},
                                  {"new_operations", it.new_operations}});
    }
    json coverage{{"total_operations", report.total_operations},
                  {"covered_operations", json(covered)},
                  {"coverage_percent", report.totals.coverage_percent},
                  {"trajectory", std::move(trajectory)}};
    files["coverage.json"] = coverage.dump(2) + "\n";

    const AnnotationJoin ann = join_annotations(root / "annotations.json", report);

    json groups = json::array();
    for (const auto& g : report.semantic_groups) {
        json members = json::array();
        for (const auto& m : g.members) {
            members.push_back(json{{"session_id", m.session_id},
                                   {"iteration", m.iteration_index},
                                   {"hlmt_id", m.hlmt_id}});
        }
        groups.push_back(json{{"slug", g.slug}, {"members", std::move(members)}});
    }
    std::set<std::string> failed_keys;
    for (const auto& s : report.failed_sequences) failed_keys.insert(s.key());

    json rj;
    rj["session_id"] = report.session_id;
    rj["stop_reason"] = report.stop_reason;
    rj["config"] = report.config_snapshot;
    rj["total_operations"] = report.total_operations;
    rj["totals"] = metrics_row_to_json(report.totals);
    rj["iterations"] = json::array();
    for (const auto& it : report.iterations) {
        rj["iterations"].push_back(iteration_summary_to_json(it));
    }
    rj["semantic_groups"] = std::move(groups);
    rj["semantic_unique_count"] = report.semantic_groups.size();
    rj["sequences"] = sequences_to_json(report.sequences);
    rj["failed_sequences"] = sequences_to_json(report.failed_sequences);
    if (ann.labeled && report.totals.failed > 0) {
        rj["tpft"] = ann.tpft;
        rj["tpr_percent"] = 100.0 * ann.tpft / report.totals.failed;
        rj["annotated_failures"] = ann.annotated;
    } else {
        rj["tpr_percent"] = "unlabeled";
    }

    std::vector<std::string> manifest;
    for (const auto& [name, bytes] : files) manifest.push_back(name);
    manifest.push_back("report.json");
    manifest.push_back("report.md");
    std::sort(manifest.begin(), manifest.end());
    rj["artifacts"] = manifest;

    files["report.json"] = rj.dump(2) + "\n";
    files["report.md"] = render_markdown(report, ann);

    for (const auto& [name, bytes] : files) write_file(root / name, bytes);
    return manifest;
}

} // namespace restmorph
