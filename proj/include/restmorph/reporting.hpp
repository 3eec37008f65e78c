#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/emt_plan.hpp"
#include "restmorph/executor.hpp"
#include "restmorph/mt_model.hpp"

namespace restmorph {

// Per-iteration (and aggregated) counters. emt_count excludes placeholder
// plans, so passed + failed == emt_count always holds; placeholders are
// tallied on the side.
struct MetricsRow {
    int hlmt_count = 0;  // HLMTs generated (post-truncation, pre-refine)
    int emt_count = 0;   // executable plans produced (placeholders excluded)
    int passed = 0;
    int failed = 0;
    int placeholder_count = 0;
    double coverage_percent = 0.0; // coverage after this row's activity
    long long elapsed_ms = 0;
};

struct IterationSummary {
    int index = 0; // 1-based
    MetricsRow row;
    int new_slug_count = 0; // semantic slugs first seen this iteration
    std::vector<std::string> new_operations; // coverage keys first hit here
    int requests_spent = 0; // HTTP requests issued this iteration
    std::map<std::string, int> failure_class_counts;
    std::vector<std::string> diagnostics;
};

struct SessionReport {
    std::string session_id;
    nlohmann::json config_snapshot;
    std::string stop_reason;
    size_t total_operations = 0; // documented operations in the spec
    std::vector<IterationSummary> iterations;
    MetricsRow totals;
    std::vector<SemanticGroup> semantic_groups;
    std::vector<Sequence> sequences;        // distinct, sorted by key
    std::vector<Sequence> failed_sequences; // subset of sequences
    // Artifact payloads, persisted by persist_session:
    std::vector<Hlmt> hlmts;                           // generation order
    std::vector<std::pair<int, EmtPlan>> plans;        // (iteration, plan)
    std::vector<ScenarioResult> results;               // execution order
};

// Counts verdicts and failure classes for one iteration's results.
// hlmt_count comes from the generated batch; the remaining summary fields
// (slugs, coverage, timing, diagnostics) are filled in by the caller.
IterationSummary summarize_iteration(int index, int hlmt_count,
                                     std::span<const ScenarioResult> results);

// Column-wise sums; coverage_percent takes the last iteration's value.
MetricsRow aggregate_totals(std::span<const IterationSummary> iterations);

// Sequences in `ours` whose key does not appear in `baseline`.
std::vector<Sequence> diff_sequences(const std::vector<Sequence>& ours,
                                     const std::vector<Sequence>& baseline);

// JSON forms used by persistence and the replay/diff tooling.
nlohmann::json scenario_result_to_json(const ScenarioResult& result);
nlohmann::json iteration_summary_to_json(const IterationSummary& summary);
nlohmann::json metrics_row_to_json(const MetricsRow& row);
nlohmann::json sequences_to_json(std::span<const Sequence> sequences);
std::vector<Sequence> sequences_from_json(const nlohmann::json& j); // throws IoError

// Writes the session's artifacts under <out_dir>/<session_id>/:
// hlmts.json, plans/iter_NN_<id>.json, results.jsonl, coverage.json,
// report.json, report.md. Returns the manifest (relative paths, sorted),
// which is also embedded in report.json. Output is byte-deterministic for
// equal reports. When <out_dir>/<session_id>/annotations.json exists, its
// labels are joined into report.json/report.md as TPFT/TPR figures.
// Throws IoError on filesystem trouble.
std::vector<std::string> persist_session(const SessionReport& report,
                                         const std::string& out_dir);

} // namespace restmorph
