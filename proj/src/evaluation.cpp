#include "cantor/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "cantor/answer_extract.hpp"
#include "cantor/errors.hpp"
#include "cantor/util/digest.hpp"
#include "cantor/util/fs.hpp"

namespace cantor {

using nlohmann::json;

namespace {

std::string format_pct(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", accuracy * 100.0);
  return buf;
}

std::string format_delta(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "(%+.2f)", delta * 100.0);
  return buf;
}

std::vector<std::string> tag_atoms(const QueryRecord& record) {
  std::vector<std::string> atoms;
  for (const auto& [key, values] : record.categories) {
    for (const auto& value : values) atoms.push_back(key + "=" + value);
  }
  return atoms;
}

GroupUsage finalize_usage(std::map<std::string, long> calls) {
  GroupUsage usage;
  long total = 0;
  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    long n = calls.count(name) ? calls[name] : 0;
    usage.calls[name] = n;
    total += n;
  }
  usage.total_calls = total;
  usage.zero_denominator = total == 0;
  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    usage.proportion[name] =
        total == 0 ? 0.0
                   : static_cast<double>(usage.calls[name]) /
                         static_cast<double>(total);
  }
  return usage;
}

bool issued(const SubTaskTrace& t) {
  return t.status != SubAnswerStatus::SkippedDisabledModule;
}

json tag_stat_json(const TagStat& stat) {
  return json{{"count", stat.count},
              {"correct", stat.correct},
              {"unscored", stat.unscored},
              {"accuracy", stat.accuracy}};
}

TagStat tag_stat_from(const json& j) {
  TagStat stat;
  stat.count = j.value("count", 0L);
  stat.correct = j.value("correct", 0L);
  stat.unscored = j.value("unscored", 0L);
  stat.accuracy = j.value("accuracy", 0.0);
  return stat;
}

json usage_json(const GroupUsage& usage) {
  return json{{"calls", usage.calls},
              {"proportion", usage.proportion},
              {"total_calls", usage.total_calls},
              {"zero_denominator", usage.zero_denominator}};
}

GroupUsage usage_from(const json& j) {
  GroupUsage usage;
  usage.calls = j.value("calls", std::map<std::string, long>{});
  usage.proportion = j.value("proportion", std::map<std::string, double>{});
  usage.total_calls = j.value("total_calls", 0L);
  usage.zero_denominator = j.value("zero_denominator", false);
  return usage;
}

}  // namespace

RunReport score_run(const std::vector<QueryTrace>& traces,
                    const std::vector<QueryRecord>& records,
                    const std::string& run_id) {
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& record : records) by_id[record.id] = &record;

  std::set<std::string> traced_ids;
  for (const auto& trace : traces) {
    if (!by_id.count(trace.record_id)) {
      throw DataError("unknown_record",
                      "trace references unknown record id " + trace.record_id);
    }
    traced_ids.insert(trace.record_id);
  }
  std::vector<std::string> missing;
  for (const auto& record : records) {
    if (!traced_ids.count(record.id)) missing.push_back(record.id);
  }
  if (!missing.empty()) {
    std::string message = "records without traces:";
    for (const auto& id : missing) message += " " + id;
    throw DataError("missing_trace", message);
  }

  RunReport report;
  report.run_id = run_id;
  report.total = static_cast<long>(traces.size());
  if (!traces.empty()) {
    report.config_digest = sha256_hex(to_json(traces.front().config).dump());
  }

  std::map<std::string, std::map<std::string, long>> usage_raw;
  for (const auto& trace : traces) {
    const QueryRecord& record = *by_id.at(trace.record_id);
    Outcome outcome = !trace.error.empty()
                          ? Outcome::Unscored
                          : compare_answer(trace.final_answer, record.gold);
    if (!trace.error.empty()) ++report.failed;
    if (outcome == Outcome::Correct) ++report.correct;
    if (outcome == Outcome::Unscored) ++report.unscored;

    for (const auto& atom : tag_atoms(record)) {
      TagStat& stat = report.per_tag[atom];
      ++stat.count;
      if (outcome == Outcome::Correct) ++stat.correct;
      if (outcome == Outcome::Unscored) ++stat.unscored;
    }

    report.timing.total_backend_latency_ms +=
        trace.decision_latency_ms + trace.synthesis_latency_ms;
    if (!trace.error.empty()) continue;
    report.timing.backend_calls += trace.baseline ? 1 : 2;
    for (const auto& st : trace.sub_tasks) {
      if (!issued(st)) continue;
      std::string name(display_name(st.sub_task.module));
      ++report.module_calls[name];
      report.timing.total_backend_latency_ms += st.latency_ms;
      ++report.timing.backend_calls;
      for (const auto& atom : tag_atoms(record)) ++usage_raw[atom][name];
    }
    // Tag atoms with zero calls still get a usage row.
    for (const auto& atom : tag_atoms(record)) usage_raw[atom];
  }

  for (ExpertModule m : kAllModules) {
    report.module_calls.try_emplace(std::string(display_name(m)), 0);
  }
  for (auto& [atom, stat] : report.per_tag) {
    stat.accuracy = stat.count == 0
                        ? 0.0
                        : static_cast<double>(stat.correct) /
                              static_cast<double>(stat.count);
  }
  for (auto& [atom, calls] : usage_raw) {
    report.usage_by_tag[atom] = finalize_usage(calls);
  }
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(report.correct) /
                              static_cast<double>(report.total);
  return report;
}

std::map<std::string, GroupUsage> module_usage_stats(
    const std::vector<QueryTrace>& traces,
    const std::vector<QueryRecord>& records, const std::string& tag_key) {
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& record : records) by_id[record.id] = &record;

  std::map<std::string, std::map<std::string, long>> raw;
  for (const auto& record : records) {
    auto it = record.categories.find(tag_key);
    if (it == record.categories.end()) continue;
    for (const auto& value : it->second) raw[value];
  }
  for (const auto& trace : traces) {
    auto rec = by_id.find(trace.record_id);
    if (rec == by_id.end()) continue;
    auto it = rec->second->categories.find(tag_key);
    if (it == rec->second->categories.end()) continue;
    for (const auto& st : trace.sub_tasks) {
      if (!issued(st)) continue;
      std::string name(display_name(st.sub_task.module));
      for (const auto& value : it->second) ++raw[value][name];
    }
  }

  std::map<std::string, GroupUsage> out;
  for (auto& [value, calls] : raw) out[value] = finalize_usage(calls);
  return out;
}

json report_to_json(const RunReport& report) {
  json per_tag = json::object();
  for (const auto& [atom, stat] : report.per_tag) per_tag[atom] = tag_stat_json(stat);
  json usage = json::object();
  for (const auto& [atom, u] : report.usage_by_tag) usage[atom] = usage_json(u);
  return json{{"run_id", report.run_id},
              {"total", report.total},
              {"correct", report.correct},
              {"unscored", report.unscored},
              {"failed", report.failed},
              {"accuracy", report.accuracy},
              {"per_tag", per_tag},
              {"module_calls", report.module_calls},
              {"usage_by_tag", usage},
              {"timing", json{{"backend_calls", report.timing.backend_calls},
                              {"total_backend_latency_ms",
                               report.timing.total_backend_latency_ms}}},
              {"config_digest", report.config_digest}};
}

RunReport report_from_json(const json& j) {
  RunReport report;
  report.run_id = j.value("run_id", "");
  report.total = j.value("total", 0L);
  report.correct = j.value("correct", 0L);
  report.unscored = j.value("unscored", 0L);
  report.failed = j.value("failed", 0L);
  report.accuracy = j.value("accuracy", 0.0);
  if (j.contains("per_tag")) {
    for (const auto& [atom, stat] : j.at("per_tag").items()) {
      report.per_tag[atom] = tag_stat_from(stat);
    }
  }
  report.module_calls = j.value("module_calls", std::map<std::string, long>{});
  if (j.contains("usage_by_tag")) {
    for (const auto& [atom, usage] : j.at("usage_by_tag").items()) {
      report.usage_by_tag[atom] = usage_from(usage);
    }
  }
  if (j.contains("timing")) {
    report.timing.backend_calls = j["timing"].value("backend_calls", 0L);
    report.timing.total_backend_latency_ms =
        j["timing"].value("total_backend_latency_ms", 0L);
  }
  report.config_digest = j.value("config_digest", "");
  return report;
}

std::string report_to_markdown(const RunReport& report) {
  std::string out = "# Run report: " + report.run_id + "\n\n";
  out += "Overall accuracy: **" + format_pct(report.accuracy) + "%** (" +
         std::to_string(report.correct) + "/" + std::to_string(report.total) +
         ", " + std::to_string(report.unscored) + " unscored, " +
         std::to_string(report.failed) + " failed)\n\n";

  if (!report.per_tag.empty()) {
    out += "## Accuracy by tag\n\n| Tag | Count | Correct | Accuracy |\n";
    out += "|---|---|---|---|\n";
    for (const auto& [atom, stat] : report.per_tag) {
      out += "| " + atom + " | " + std::to_string(stat.count) + " | " +
             std::to_string(stat.correct) + " | " + format_pct(stat.accuracy) +
             "% |\n";
    }
    out += "\n";
  }

  out += "## Expert module calls\n\n| Module | Calls |\n|---|---|\n";
  for (const auto& [name, calls] : report.module_calls) {
    out += "| " + name + " | " + std::to_string(calls) + " |\n";
  }
  out += "\n";

  if (!report.usage_by_tag.empty()) {
    out += "## Module usage proportions by tag\n\n| Tag |";
    for (ExpertModule m : kAllModules) {
      out += " " + std::string(display_name(m)) + " |";
    }
    out += "\n|---|---|---|---|---|\n";
    for (const auto& [atom, usage] : report.usage_by_tag) {
      out += "| " + atom + " |";
      for (ExpertModule m : kAllModules) {
        std::string name(display_name(m));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", usage.proportion.at(name));
        out += std::string(" ") + buf + " |";
      }
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

std::string report_to_csv(const RunReport& report) {
  std::string out = "tag,metric,value\n";
  out += "overall,accuracy," + std::to_string(report.accuracy) + "\n";
  out += "overall,total," + std::to_string(report.total) + "\n";
  out += "overall,correct," + std::to_string(report.correct) + "\n";
  out += "overall,unscored," + std::to_string(report.unscored) + "\n";
  out += "overall,failed," + std::to_string(report.failed) + "\n";
  for (const auto& [atom, stat] : report.per_tag) {
    out += atom + ",count," + std::to_string(stat.count) + "\n";
    out += atom + ",correct," + std::to_string(stat.correct) + "\n";
    out += atom + ",accuracy," + std::to_string(stat.accuracy) + "\n";
  }
  for (const auto& [name, calls] : report.module_calls) {
    out += "module=" + name + ",calls," + std::to_string(calls) + "\n";
  }
  return out;
}

// ---------------- ablation matrix ----------------

namespace {

RunReport run_mode(const std::vector<QueryRecord>& records,
                   const RunConfig& base, const AblationMode& mode,
                   const PipelineFactory& factory, const EvalOptions& options) {
  RunConfig config = apply_ablation(base, mode);
  Pipeline pipeline = factory(config);
  EvalResult eval = run_eval(pipeline, records, options);
  return score_run(eval.traces, records, mode.label());
}

}  // namespace

AblationResult run_ablation_matrix(const std::vector<QueryRecord>& records,
                                   const RunConfig& base,
                                   const PipelineFactory& factory,
                                   const EvalOptions& options) {
  AblationResult result;
  result.baseline_report =
      run_mode(records, base, AblationMode::baseline(), factory, options);
  result.baseline_accuracy = result.baseline_report.accuracy;
  result.full_report =
      run_mode(records, base, AblationMode::full(), factory, options);
  result.full_accuracy = result.full_report.accuracy;

  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    AblationCell enable;
    enable.report =
        run_mode(records, base, AblationMode::enable_only(m), factory, options);
    enable.accuracy = enable.report.accuracy;
    enable.delta = enable.accuracy - result.baseline_accuracy;
    result.enable_only[name] = std::move(enable);

    AblationCell disable;
    disable.report =
        run_mode(records, base, AblationMode::disable_only(m), factory, options);
    disable.accuracy = disable.report.accuracy;
    disable.delta = disable.accuracy - result.full_accuracy;
    result.disable_only[name] = std::move(disable);
  }
  return result;
}

json ablation_to_json(const AblationResult& result) {
  json modules = json::object();
  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    const auto& enable = result.enable_only.at(name);
    const auto& disable = result.disable_only.at(name);
    modules[name] = json{
        {"enable_only", json{{"accuracy", enable.accuracy}, {"delta", enable.delta}}},
        {"disable_only", json{{"accuracy", disable.accuracy}, {"delta", disable.delta}}}};
  }
  return json{{"modules", modules},
              {"baseline_accuracy", result.baseline_accuracy},
              {"full_accuracy", result.full_accuracy},
              {"baseline_report", report_to_json(result.baseline_report)},
              {"full_report", report_to_json(result.full_report)}};
}

std::string ablation_to_markdown(const AblationResult& result) {
  std::string out = "# Ablation matrix\n\n";
  out += "| Module | Enable Only | Disable Only |\n|---|---|---|\n";
  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    const auto& enable = result.enable_only.at(name);
    const auto& disable = result.disable_only.at(name);
    out += "| " + name + " | " + format_pct(enable.accuracy) +
           format_delta(enable.delta) + " | " + format_pct(disable.accuracy) +
           format_delta(disable.delta) + " |\n";
  }
  out += "| Baseline | " + format_pct(result.baseline_accuracy) + " | |\n";
  out += "| Full | " + format_pct(result.full_accuracy) + " | |\n";
  return out;
}

std::string ablation_to_csv(const AblationResult& result) {
  std::string out = "row,mode,accuracy,delta\n";
  for (ExpertModule m : kAllModules) {
    std::string name(display_name(m));
    const auto& enable = result.enable_only.at(name);
    const auto& disable = result.disable_only.at(name);
    out += name + ",enable_only," + std::to_string(enable.accuracy) + "," +
           std::to_string(enable.delta) + "\n";
    out += name + ",disable_only," + std::to_string(disable.accuracy) + "," +
           std::to_string(disable.delta) + "\n";
  }
  out += "Baseline,baseline," + std::to_string(result.baseline_accuracy) + ",0\n";
  out += "Full,full," + std::to_string(result.full_accuracy) + ",0\n";
  return out;
}

// ---------------- visual-level sweep ----------------

std::vector<VisualSweepRow> run_visual_sweep(
    const std::vector<QueryRecord>& records, const RunConfig& base,
    const std::vector<VisualLevel>& levels, const PipelineFactory& factory,
    const EvalOptions& options) {
  std::vector<VisualSweepRow> rows;
  for (VisualLevel level : levels) {
    RunConfig config = base;
    config.baseline_mode = true;
    config.visual_level = level;
    Pipeline pipeline = factory(config);
    EvalResult eval = run_eval(pipeline, records, options);
    VisualSweepRow row;
    row.level = level;
    for (const auto& trace : eval.traces) {
      if (trace.error_code == "missing_caption") ++row.skipped_missing_caption;
    }
    row.report = score_run(eval.traces, records,
                           "visual_" + std::string(to_string(level)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json sweep_to_json(const std::vector<VisualSweepRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back(json{{"level", std::string(to_string(row.level))},
                       {"accuracy", row.report.accuracy},
                       {"skipped_missing_caption", row.skipped_missing_caption},
                       {"report", report_to_json(row.report)}});
  }
  return out;
}

std::string sweep_to_markdown(const std::vector<VisualSweepRow>& rows) {
  std::string out = "# Visual-information levels\n\n";
  out += "| Level | Accuracy | Skipped (missing caption) |\n|---|---|---|\n";
  for (const auto& row : rows) {
    out += "| " + std::string(to_string(row.level)) + " | " +
           format_pct(row.report.accuracy) + "% | " +
           std::to_string(row.skipped_missing_caption) + " |\n";
  }
  return out;
}

std::string sweep_to_csv(const std::vector<VisualSweepRow>& rows) {
  std::string out = "level,accuracy,skipped_missing_caption\n";
  for (const auto& row : rows) {
    out += std::string(to_string(row.level)) + "," +
           std::to_string(row.report.accuracy) + "," +
           std::to_string(row.skipped_missing_caption) + "\n";
  }
  return out;
}

// ---------------- run directory ----------------

void write_traces(const std::filesystem::path& run_dir,
                  const std::vector<QueryTrace>& traces) {
  std::filesystem::create_directories(run_dir / "traces");
  for (const auto& trace : traces) {
    write_file(run_dir / "traces" / (trace.record_id + ".json"),
               trace_to_json(trace).dump(2) + "\n");
  }
}

void write_manifest(const std::filesystem::path& run_dir,
                    const std::string& run_id, const RunConfig& config,
                    const std::map<std::string, std::string>& prompt_digests,
                    size_t record_count) {
  json manifest{{"run_id", run_id},
                {"config", to_json(config)},
                {"prompt_resource_digests", prompt_digests},
                {"record_count", record_count}};
  write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
}

void write_report_files(const std::filesystem::path& run_dir,
                        const RunReport& report) {
  write_file(run_dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(run_dir / "report.md", report_to_markdown(report));
  write_file(run_dir / "report.csv", report_to_csv(report));
}

}  // namespace cantor
