#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cantor/datasets.hpp"
#include "cantor/errors.hpp"
#include "cantor/evaluation.hpp"
#include "cantor/http_backend.hpp"
#include "cantor/pipeline.hpp"
#include "cantor/prompting.hpp"
#include "cantor/response_cache.hpp"
#include "cantor/transcript.hpp"
#include "cantor/util/fs.hpp"

using namespace cantor;
using nlohmann::json;

namespace {

std::atomic<bool> g_cancel{false};

void handle_sigint(int) { g_cancel.store(true); }

struct CliContext {
  std::string prompts_dir;
  TranscriptMode transcript_mode = TranscriptMode::Off;
  std::string transcript_path;
  std::shared_ptr<TranscriptWriter> writer;
};

std::filesystem::path resolve_prompts_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CANTOR_PROMPTS_DIR"); env && *env) {
    return env;
  }
  if (std::filesystem::is_directory("prompts")) return "prompts";
  return CANTOR_DEFAULT_PROMPTS_DIR;
}

// Applies one --set override like "sampling.temperature=0.2" onto the
// config JSON tree. Values parse as JSON when possible; comma lists become
// string arrays; everything else is a plain string.
void apply_override(json& config, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set expects key=value, got: " + assignment);
  }
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);

  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    if (value.find(',') != std::string::npos) {
      parsed = json::array();
      size_t pos = 0;
      while (pos <= value.size()) {
        size_t comma = value.find(',', pos);
        std::string piece = comma == std::string::npos
                                ? value.substr(pos)
                                : value.substr(pos, comma - pos);
        parsed.push_back(piece);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } else {
      parsed = value;
    }
  }

  json* node = &config;
  size_t pos = 0;
  while (true) {
    size_t dot = path.find('.', pos);
    std::string key =
        dot == std::string::npos ? path.substr(pos) : path.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("bad --set path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

RunConfig load_config(const std::string& config_path,
                      const std::vector<std::string>& overrides) {
  json tree = json::object();
  if (!config_path.empty()) {
    json parsed = json::parse(read_file(config_path), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw ConfigError("unparseable config file: " + config_path);
    }
    tree = std::move(parsed);
  }
  for (const auto& assignment : overrides) apply_override(tree, assignment);
  RunConfig config = config_from_json(tree);
  auto violations = validate_config(config);
  if (!violations.empty()) {
    std::string message = "invalid config:";
    for (const auto& v : violations) message += " " + v.field + ": " + v.rule + ";";
    throw ConfigError(message);
  }
  return config;
}

std::filesystem::path cache_dir_for(const RunConfig& config) {
  if (!config.cache.dir.empty()) return config.cache.dir;
  if (const char* env = std::getenv("CANTOR_CACHE_DIR"); env && *env) return env;
  return ".cantor-cache";
}

BoundBackends bind_backends(const RunConfig& config, CliContext& ctx) {
  std::shared_ptr<ResponseCache> cache;
  if (config.cache.enabled) {
    cache = std::make_shared<ResponseCache>(cache_dir_for(config));
  }
  if (ctx.transcript_mode == TranscriptMode::Record && !ctx.writer) {
    ctx.writer = std::make_shared<TranscriptWriter>(ctx.transcript_path);
  }
  auto bind = [&](const BackendBinding& binding) {
    return build_backend_stack(binding, config, ctx.transcript_mode,
                               ctx.transcript_path, ctx.writer, cache);
  };
  return {bind(config.decision_backend), bind(config.expert_backend),
          bind(config.synthesis_backend)};
}

PipelineFactory make_factory(std::shared_ptr<const PromptLibrary> prompts,
                             CliContext& ctx) {
  return [prompts, &ctx](const RunConfig& config) {
    return Pipeline(config, prompts, bind_backends(config, ctx));
  };
}

std::vector<QueryRecord> load_records(const std::string& path, long limit) {
  auto records = load_canonical(path);
  if (limit > 0 && static_cast<long>(records.size()) > limit) {
    records.resize(static_cast<size_t>(limit));
  }
  return records;
}

void progress_to_stderr(size_t done, size_t total) {
  if (done == total || done % 10 == 0) {
    std::cerr << "\r" << done << "/" << total << " queries" << std::flush;
    if (done == total) std::cerr << "\n";
  }
}

// Scans an eval result for replay misses; those make the whole run a
// backend failure (exit 4) rather than a partial result.
void check_replay_misses(const EvalResult& result) {
  for (const auto& trace : result.traces) {
    if (trace.error_code == "replay_miss") {
      throw BackendError(BackendError::Kind::ReplayMiss, trace.error);
    }
  }
}

int finish_eval_run(const std::filesystem::path& out_dir,
                    const std::string& run_id, const RunConfig& config,
                    const PromptLibrary& prompts,
                    const std::vector<QueryRecord>& records,
                    const EvalResult& result) {
  write_traces(out_dir, result.traces);
  write_manifest(out_dir, run_id, config, prompts.resource_digests,
                 records.size());
  // Score whatever completed; a cancelled run keeps its partial traces.
  std::vector<QueryRecord> scored_records;
  if (result.traces.size() == records.size()) {
    scored_records = records;
  } else {
    std::map<std::string, const QueryRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    for (const auto& trace : result.traces) {
      scored_records.push_back(*by_id.at(trace.record_id));
    }
  }
  RunReport report = score_run(result.traces, scored_records, run_id);
  write_report_files(out_dir, report);
  std::cout << "run " << run_id << ": accuracy "
            << report.accuracy << " (" << report.correct << "/" << report.total
            << "), unscored " << report.unscored << ", report "
            << (out_dir / "report.json").string() << "\n";
  if (result.cancelled || result.failed > 0) return 5;
  return 0;
}

int cmd_import(const std::string& kind, const std::string& source,
               const std::string& split, const std::string& images,
               const std::string& out) {
  ImportResult result;
  if (kind == "scienceqa") {
    result = import_scienceqa(source, split.empty() ? "test" : split, images);
  } else if (kind == "mathvista") {
    result = import_mathvista(source, images);
  } else {
    throw ConfigError("unknown dataset kind: " + kind);
  }
  for (const auto& warning : result.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  save_canonical(out, result.records);
  std::cout << "imported " << result.records.size() << " records to " << out
            << "\n";
  return 0;
}

int cmd_caption(CliContext& ctx, const std::string& records_path,
                const std::string& out, const std::string& level_name,
                const std::string& role, const RunConfig& config) {
  auto level = parse_visual_level(level_name);
  if (!level || (*level != VisualLevel::RoughCaption &&
                 *level != VisualLevel::DetailedCaption)) {
    throw ConfigError("caption level must be rough or detailed");
  }
  auto prompts = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(resolve_prompts_dir(ctx.prompts_dir)));
  auto records = load_records(records_path, 0);
  BoundBackends backends = bind_backends(config, ctx);
  BackendPtr backend = role == "decision"    ? backends.decision
                       : role == "synthesis" ? backends.synthesis
                                             : backends.expert;

  std::string key(to_string(*level));
  size_t captioned = 0, skipped = 0;
  for (auto& record : records) {
    if (record.visual.level != VisualLevel::Image) {
      ++skipped;
      continue;
    }
    if (record.captions.count(key)) continue;
    BackendRequest request;
    request.model_id = config.expert_backend.model_id;
    request.text = build_caption_prompt(*prompts, *level);
    request.image = record.visual.image;
    request.sampling = config.sampling;
    record.captions[key] = backend->complete(request).text;
    ++captioned;
  }
  save_canonical(out, records);
  std::cout << "captioned " << captioned << " records (" << skipped
            << " without images) -> " << out << "\n";
  return 0;
}

int cmd_run(CliContext& ctx, const std::string& records_path,
            const std::string& record_id, const RunConfig& config,
            const std::string& out) {
  auto prompts = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(resolve_prompts_dir(ctx.prompts_dir)));
  auto records = load_records(records_path, 0);
  const QueryRecord* record = nullptr;
  for (const auto& r : records) {
    if (r.id == record_id) record = &r;
  }
  if (!record) {
    throw DataError("unknown_record", "no record with id " + record_id +
                                          " in " + records_path);
  }
  Pipeline pipeline(config, prompts, bind_backends(config, ctx));
  QueryTrace trace = pipeline.run_query(*record);
  std::cout << to_json(trace.final_answer).dump(2) << "\n";
  if (!out.empty()) {
    std::filesystem::path trace_path =
        std::filesystem::path(out) / "traces" / (trace.record_id + ".json");
    write_file(trace_path, trace_to_json(trace).dump(2) + "\n");
    std::cout << "trace: " << trace_path.string() << "\n";
  }
  return 0;
}

int cmd_eval(CliContext& ctx, const std::string& records_path,
             const RunConfig& config, const std::string& out, long limit) {
  auto prompts = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(resolve_prompts_dir(ctx.prompts_dir)));
  auto records = load_records(records_path, limit);
  Pipeline pipeline(config, prompts, bind_backends(config, ctx));

  EvalOptions options;
  options.progress = progress_to_stderr;
  options.cancel = &g_cancel;
  EvalResult result = run_eval(pipeline, records, options);
  check_replay_misses(result);

  std::filesystem::path out_dir(out);
  std::string run_id = out_dir.filename().string();
  return finish_eval_run(out_dir, run_id, config, *prompts, records, result);
}

int cmd_ablate(CliContext& ctx, const std::string& records_path,
               const RunConfig& config, const std::string& out, long limit) {
  auto prompts = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(resolve_prompts_dir(ctx.prompts_dir)));
  auto records = load_records(records_path, limit);

  EvalOptions options;
  options.cancel = &g_cancel;
  AblationResult result =
      run_ablation_matrix(records, config, make_factory(prompts, ctx), options);

  std::filesystem::path out_dir(out);
  write_file(out_dir / "ablation.json", ablation_to_json(result).dump(2) + "\n");
  write_file(out_dir / "ablation.md", ablation_to_markdown(result));
  write_file(out_dir / "ablation.csv", ablation_to_csv(result));
  write_manifest(out_dir, out_dir.filename().string(), config,
                 prompts->resource_digests, records.size());
  std::cout << ablation_to_markdown(result);
  return 0;
}

int cmd_sweep(CliContext& ctx, const std::string& records_path,
              const RunConfig& config, const std::string& levels_arg,
              const std::string& out, long limit) {
  std::vector<VisualLevel> levels;
  size_t pos = 0;
  while (pos <= levels_arg.size()) {
    size_t comma = levels_arg.find(',', pos);
    std::string piece = comma == std::string::npos
                            ? levels_arg.substr(pos)
                            : levels_arg.substr(pos, comma - pos);
    if (!piece.empty()) {
      auto level = parse_visual_level(piece);
      if (!level) throw ConfigError("unknown visual level: " + piece);
      levels.push_back(*level);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (levels.empty()) {
    levels = {VisualLevel::None, VisualLevel::RoughCaption,
              VisualLevel::DetailedCaption, VisualLevel::Image};
  }

  auto prompts = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(resolve_prompts_dir(ctx.prompts_dir)));
  auto records = load_records(records_path, limit);

  EvalOptions options;
  options.cancel = &g_cancel;
  auto rows = run_visual_sweep(records, config, levels,
                               make_factory(prompts, ctx), options);

  std::filesystem::path out_dir(out);
  write_file(out_dir / "sweep.json", sweep_to_json(rows).dump(2) + "\n");
  write_file(out_dir / "sweep.md", sweep_to_markdown(rows));
  write_file(out_dir / "sweep.csv", sweep_to_csv(rows));
  write_manifest(out_dir, out_dir.filename().string(), config,
                 prompts->resource_digests, records.size());
  std::cout << sweep_to_markdown(rows);
  return 0;
}

int cmd_trace_show(const std::string& path) {
  QueryTrace trace = trace_from_json(json::parse(read_file(path)));
  std::cout << "record:    " << trace.record_id << "\n";
  std::cout << "mode:      " << (trace.baseline ? "baseline" : "pipeline") << "\n";
  if (!trace.error.empty()) {
    std::cout << "error:     [" << trace.error_code << "] " << trace.error << "\n";
    return 0;
  }
  if (!trace.baseline) {
    std::cout << "\n-- decision (prompt sha256 " << trace.decision_prompt_digest
              << ", retries " << trace.diagnostics.reprompt_retries << ")\n";
    std::cout << trace.decision_raw << "\n";
    for (const auto& warning : trace.diagnostics.warnings) {
      std::cout << "  warning[" << warning.code << "]: " << warning.message << "\n";
    }
    std::cout << "\n-- sub-tasks (" << trace.sub_tasks.size() << ")\n";
    for (const auto& st : trace.sub_tasks) {
      std::cout << "  " << st.expert_prompt << "\n    [" << to_string(st.status)
                << "] " << st.text << "\n";
    }
  }
  std::cout << "\n-- synthesis (prompt sha256 " << trace.synthesis_prompt_digest
            << ")\n" << trace.synthesis_raw << "\n";
  std::cout << "\n-- final answer\n" << to_json(trace.final_answer).dump(2) << "\n";
  std::cout << "digest: " << trace_digest(trace) << "\n";
  return 0;
}

int cmd_cache(const std::string& action, const std::string& dir) {
  std::filesystem::path path = dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("CANTOR_CACHE_DIR"); env && *env) {
      path = env;
    } else {
      path = ".cantor-cache";
    }
  }
  ResponseCache cache(path);
  if (action == "clear") {
    cache.clear();
    std::cout << "cache cleared: " << path.string() << "\n";
    return 0;
  }
  auto stats = cache.stats();
  std::cout << "cache dir:  " << path.string() << "\n"
            << "entries:    " << stats.entries << "\n"
            << "shards:     " << stats.shards << "\n"
            << "bytes:      " << stats.bytes << "\n";
  return 0;
}

int dispatch(std::vector<std::string> args, CliContext& ctx);

// `record --transcript T <command...>` / `replay --transcript T <command...>`
// wrap any other subcommand.
int handle_wrapper(std::vector<std::string>& args, CliContext& ctx) {
  TranscriptMode mode =
      args[0] == "record" ? TranscriptMode::Record : TranscriptMode::Replay;
  args.erase(args.begin());
  std::string transcript;
  if (!args.empty() && args[0].rfind("--transcript=", 0) == 0) {
    transcript = args[0].substr(std::string("--transcript=").size());
    args.erase(args.begin());
  } else if (args.size() >= 2 && args[0] == "--transcript") {
    transcript = args[1];
    args.erase(args.begin(), args.begin() + 2);
  } else {
    throw ConfigError("record/replay require --transcript <path>");
  }
  if (args.empty()) {
    throw ConfigError("record/replay wrap another command, e.g. "
                      "`cantor record --transcript t.jsonl eval ...`");
  }
  ctx.transcript_mode = mode;
  ctx.transcript_path = transcript;
  return dispatch(std::move(args), ctx);
}

int dispatch(std::vector<std::string> args, CliContext& ctx) {
  if (!args.empty() && (args[0] == "record" || args[0] == "replay")) {
    return handle_wrapper(args, ctx);
  }

  CLI::App app{"Multimodal chain-of-thought pipeline and evaluation harness"};
  app.require_subcommand(1);
  app.add_option("--prompts", ctx.prompts_dir,
                 "Prompt resource directory (default: $CANTOR_PROMPTS_DIR or ./prompts)");

  std::string source, split = "test", images, out, records_path, record_id;
  std::string config_path, level = "detailed", role = "expert", levels_arg;
  std::string trace_path, cache_action = "stats", cache_dir, import_kind;
  std::vector<std::string> overrides;
  long limit = 0;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file (JSON)");
    cmd->add_option("--set", overrides, "Override config values, key=value");
  };

  CLI::App* import_cmd = app.add_subcommand("import", "Import an upstream dataset to canonical JSONL");
  import_cmd->add_option("kind", import_kind, "scienceqa | mathvista")->required();
  import_cmd->add_option("--source", source, "Upstream problems/testmini JSON")->required();
  import_cmd->add_option("--split", split, "Split to import (scienceqa; default test)");
  import_cmd->add_option("--images", images, "Image root directory");
  import_cmd->add_option("--out", out, "Output canonical JSONL")->required();

  CLI::App* caption_cmd = app.add_subcommand("caption", "Generate captions for image records");
  caption_cmd->add_option("--records", records_path, "Canonical records JSONL")->required();
  caption_cmd->add_option("--out", out, "Output records JSONL")->required();
  caption_cmd->add_option("--level", level, "rough | detailed (default detailed)");
  caption_cmd->add_option("--backend", role, "Binding to use: decision|expert|synthesis");
  add_config_flags(caption_cmd);

  CLI::App* run_cmd = app.add_subcommand("run", "Run one record through the pipeline");
  run_cmd->add_option("--records", records_path, "Canonical records JSONL")->required();
  run_cmd->add_option("--record-id", record_id, "Record id to run")->required();
  run_cmd->add_option("--out", out, "Run directory for the trace (optional)");
  add_config_flags(run_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate records; write traces and a report");
  eval_cmd->add_option("--records", records_path, "Canonical records JSONL")->required();
  eval_cmd->add_option("--out", out, "Run directory, e.g. runs/exp1")->required();
  eval_cmd->add_option("--limit", limit, "Evaluate only the first N records");
  add_config_flags(eval_cmd);

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Run the enable/disable ablation matrix");
  ablate_cmd->add_option("--records", records_path, "Canonical records JSONL")->required();
  ablate_cmd->add_option("--out", out, "Output directory")->required();
  ablate_cmd->add_option("--limit", limit, "Use only the first N records");
  add_config_flags(ablate_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep-visual", "Accuracy per visual-information level");
  sweep_cmd->add_option("--records", records_path, "Canonical records JSONL")->required();
  sweep_cmd->add_option("--levels", levels_arg, "Comma list: none,rough,detailed,image");
  sweep_cmd->add_option("--out", out, "Output directory")->required();
  sweep_cmd->add_option("--limit", limit, "Use only the first N records");
  add_config_flags(sweep_cmd);

  CLI::App* trace_cmd = app.add_subcommand("trace", "Trace utilities");
  CLI::App* trace_show = trace_cmd->add_subcommand("show", "Human-readable stage dump");
  trace_show->add_option("path", trace_path, "Trace JSON path")->required();

  CLI::App* cache_cmd = app.add_subcommand("cache", "Cache utilities");
  cache_cmd->add_option("action", cache_action, "stats | clear");
  cache_cmd->add_option("--dir", cache_dir, "Cache directory");

  std::vector<const char*> argv;
  argv.push_back("cantor");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  if (import_cmd->parsed()) {
    return cmd_import(import_kind, source, split, images, out);
  }
  if (caption_cmd->parsed()) {
    return cmd_caption(ctx, records_path, out, level, role,
                       load_config(config_path, overrides));
  }
  if (run_cmd->parsed()) {
    return cmd_run(ctx, records_path, record_id,
                   load_config(config_path, overrides), out);
  }
  if (eval_cmd->parsed()) {
    return cmd_eval(ctx, records_path, load_config(config_path, overrides),
                    out, limit);
  }
  if (ablate_cmd->parsed()) {
    return cmd_ablate(ctx, records_path, load_config(config_path, overrides),
                      out, limit);
  }
  if (sweep_cmd->parsed()) {
    return cmd_sweep(ctx, records_path, load_config(config_path, overrides),
                     levels_arg, out, limit);
  }
  if (trace_cmd->parsed() && trace_show->parsed()) {
    return cmd_trace_show(trace_path);
  }
  if (cache_cmd->parsed()) {
    if (cache_action != "stats" && cache_action != "clear") {
      throw ConfigError("cache action must be stats or clear");
    }
    return cmd_cache(cache_action, cache_dir);
  }
  throw ConfigError("no command given; see --help");
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_sigint);
  std::vector<std::string> args(argv + 1, argv + argc);
  CliContext ctx;
  try {
    return dispatch(std::move(args), ctx);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const ParseError& err) {
    std::cerr << "parse error [" << err.code() << "]: " << err.what() << "\n";
    return 3;
  } catch (const DataError& err) {
    std::cerr << "data error [" << err.code() << "]: " << err.what() << "\n";
    return 3;
  } catch (const BackendError& err) {
    std::cerr << "backend error [" << err.code() << "]: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
