#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cantor/backends.hpp"
#include "cantor/decision_parser.hpp"
#include "cantor/domain.hpp"
#include "cantor/prompting.hpp"

namespace cantor {

struct BoundBackends {
  BackendPtr decision;
  BackendPtr expert;
  BackendPtr synthesis;
};

struct SubTaskTrace {
  SubTask sub_task;
  std::string expert_prompt;
  SubAnswerStatus status = SubAnswerStatus::Ok;
  std::string text;
  long latency_ms = 0;  // backend-reported; excluded from the trace digest
};

struct TraceTimings {
  long decision_ms = 0;
  long modularization_ms = 0;
  long synthesis_ms = 0;
  long total_ms = 0;
};

// Full per-query record of prompts, decision, sub-answers, and the final
// answer. Together with the prompt resources and the query record it is
// sufficient to re-render every prompt byte-identically (the one re-prompt
// retry appends a fixed suffix, derivable from diagnostics).
struct QueryTrace {
  std::string record_id;
  bool baseline = false;
  RunConfig config;
  std::string decision_prompt_digest;
  std::string decision_raw;
  Decision decision;
  ParseDiagnostics diagnostics;
  std::vector<SubTaskTrace> sub_tasks;
  SupplementaryInfo supplementary;
  std::string synthesis_prompt_digest;
  std::string synthesis_raw;
  FinalAnswer final_answer;
  std::string error;       // fatal stage error note; empty when the query ran
  std::string error_code;  // typed code for `error`
  // Backend-reported latencies (deterministic under mock/replay); excluded
  // from the digest like the per-sub-task latencies.
  long decision_latency_ms = 0;
  long synthesis_latency_ms = 0;
  TraceTimings timings;    // measured wall clock; excluded from the digest
};

nlohmann::json trace_to_json(const QueryTrace& trace);
QueryTrace trace_from_json(const nlohmann::json& j);

// Digest over the canonical trace form: timings, per-call latencies, and
// other transport metadata are excluded, so mock/replay runs digest
// byte-identically across executions.
std::string trace_digest(const QueryTrace& trace);

// Ordered (sub-task, sub-answer) pairs. Every pair is retained in the
// structured list; only Ok pairs are rendered, as
// "Sub-task i: <expert prompt>\nAnswer i: <answer>" blocks in order.
SupplementaryInfo assemble_supplementary(const std::vector<SubAnswer>& pairs);

struct AblationMode {
  enum class Kind { Full, Baseline, EnableOnly, DisableOnly };
  Kind kind = Kind::Full;
  ExpertModule module = ExpertModule::TextIntelExtractor;

  static AblationMode full() { return {Kind::Full, {}}; }
  static AblationMode baseline() { return {Kind::Baseline, {}}; }
  static AblationMode enable_only(ExpertModule m) { return {Kind::EnableOnly, m}; }
  static AblationMode disable_only(ExpertModule m) { return {Kind::DisableOnly, m}; }

  std::string label() const;
};

// EnableOnly m -> enabled = {m}; DisableOnly m -> all four minus m;
// Full -> all four; Baseline -> pipeline bypass (direct question->answer).
RunConfig apply_ablation(const RunConfig& base, const AblationMode& mode);

class Pipeline {
 public:
  Pipeline(RunConfig config, std::shared_ptr<const PromptLibrary> prompts,
           BoundBackends backends);

  // Runs the three stages in order: decision generation (with one
  // re-prompt retry on a format failure), modularization (skipped when S_t
  // is empty; synthesis still runs), synthesis + answer extraction.
  // Throws typed errors on decision/synthesis stage failures; per-sub-task
  // backend errors are contained in SubAnswer statuses.
  QueryTrace run_query(const QueryRecord& record) const;

  // Dispatches each sub-task to the expert backend in order; results come
  // back in S_t order regardless of internal scheduling. Backend failures
  // are captured per sub-task, never thrown; sub-tasks whose module is not
  // enabled are skipped without a call.
  std::vector<SubAnswer> run_modularization(
      const std::vector<SubTask>& sub_tasks, const VisualInput& visual) const;

  const RunConfig& config() const { return config_; }
  const PromptLibrary& prompts() const { return *prompts_; }

 private:
  std::vector<SubTaskTrace> modularize_traced(
      const std::vector<SubTask>& sub_tasks, const VisualInput& visual) const;

  RunConfig config_;
  std::shared_ptr<const PromptLibrary> prompts_;
  BoundBackends backends_;
};

struct EvalOptions {
  std::function<void(size_t done, size_t total)> progress;
  std::atomic<bool>* cancel = nullptr;
};

struct EvalResult {
  std::vector<QueryTrace> traces;  // one per attempted record, input order
  size_t failed = 0;               // traces with a fatal stage error
  bool cancelled = false;
};

// Runs records through the pipeline with config.parallelism workers.
// Per-record stage errors become error traces (unscored) rather than
// aborting the run.
EvalResult run_eval(const Pipeline& pipeline,
                    const std::vector<QueryRecord>& records,
                    const EvalOptions& options = {});

}  // namespace cantor
