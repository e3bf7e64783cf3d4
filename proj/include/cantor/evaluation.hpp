#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cantor/pipeline.hpp"

namespace cantor {

struct TagStat {
  long count = 0;
  long correct = 0;
  long unscored = 0;
  double accuracy = 0.0;

  bool operator==(const TagStat&) const = default;
};

struct GroupUsage {
  std::map<std::string, long> calls;        // module display name -> count
  std::map<std::string, double> proportion; // all four modules, zeros kept
  long total_calls = 0;
  bool zero_denominator = false;

  bool operator==(const GroupUsage&) const = default;
};

struct TimingAggregate {
  long backend_calls = 0;
  long total_backend_latency_ms = 0;

  bool operator==(const TimingAggregate&) const = default;
};

struct RunReport {
  std::string run_id;
  long total = 0;
  long correct = 0;
  long unscored = 0;
  long failed = 0;  // traces with a fatal stage error (subset of unscored)
  double accuracy = 0.0;
  std::map<std::string, TagStat> per_tag;        // "subject=NAT" -> stat
  std::map<std::string, long> module_calls;      // overall issued calls
  std::map<std::string, GroupUsage> usage_by_tag;
  TimingAggregate timing;  // backend-reported latencies only
  std::string config_digest;

  bool operator==(const RunReport&) const = default;
};

// Scores a run: accuracy = correct / total with unscored counted as
// incorrect, per-tag breakdown over every "key=value" tag atom present,
// and per-module call counts/proportions. Every record must have exactly
// one trace; throws DataError{missing_trace | unknown_record} otherwise.
RunReport score_run(const std::vector<QueryTrace>& traces,
                    const std::vector<QueryRecord>& records,
                    const std::string& run_id = "run");

// Proportion of expert-module invocations per value group of one tag key
// (e.g. key "subject" -> groups NAT/SOC/LAN). Zero-call modules report 0;
// zero-task groups are flagged rather than emitting NaNs.
std::map<std::string, GroupUsage> module_usage_stats(
    const std::vector<QueryTrace>& traces,
    const std::vector<QueryRecord>& records, const std::string& tag_key);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);
std::string report_to_markdown(const RunReport& report);
std::string report_to_csv(const RunReport& report);

// ---------------- ablation matrix ----------------

using PipelineFactory = std::function<Pipeline(const RunConfig&)>;

struct AblationCell {
  double accuracy = 0.0;
  double delta = 0.0;  // EnableOnly: vs baseline; DisableOnly: vs full
  RunReport report;
};

struct AblationResult {
  std::map<std::string, AblationCell> enable_only;   // module display name
  std::map<std::string, AblationCell> disable_only;
  double full_accuracy = 0.0;
  double baseline_accuracy = 0.0;
  RunReport full_report;
  RunReport baseline_report;
};

// Runs EnableOnly and DisableOnly for each module plus Full and Baseline
// (ten runs), with deltas against the baseline row (EnableOnly) and the
// full row (DisableOnly).
AblationResult run_ablation_matrix(const std::vector<QueryRecord>& records,
                                   const RunConfig& base,
                                   const PipelineFactory& factory,
                                   const EvalOptions& options = {});

nlohmann::json ablation_to_json(const AblationResult& result);
std::string ablation_to_markdown(const AblationResult& result);
std::string ablation_to_csv(const AblationResult& result);

// ---------------- visual-level sweep ----------------

struct VisualSweepRow {
  VisualLevel level = VisualLevel::None;
  RunReport report;
  long skipped_missing_caption = 0;
};

// One baseline-mode run per level, rows in the given order.
std::vector<VisualSweepRow> run_visual_sweep(
    const std::vector<QueryRecord>& records, const RunConfig& base,
    const std::vector<VisualLevel>& levels, const PipelineFactory& factory,
    const EvalOptions& options = {});

nlohmann::json sweep_to_json(const std::vector<VisualSweepRow>& rows);
std::string sweep_to_markdown(const std::vector<VisualSweepRow>& rows);
std::string sweep_to_csv(const std::vector<VisualSweepRow>& rows);

// ---------------- run directory ----------------

// runs/<run_id>/traces/<record_id>.json
void write_traces(const std::filesystem::path& run_dir,
                  const std::vector<QueryTrace>& traces);

// runs/<run_id>/manifest.json: effective config + prompt-resource digests.
void write_manifest(const std::filesystem::path& run_dir,
                    const std::string& run_id, const RunConfig& config,
                    const std::map<std::string, std::string>& prompt_digests,
                    size_t record_count);

// report.json / report.md / report.csv under the run directory.
void write_report_files(const std::filesystem::path& run_dir,
                        const RunReport& report);

}  // namespace cantor
