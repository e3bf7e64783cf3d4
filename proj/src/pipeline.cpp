#include "cantor/pipeline.hpp"

#include <chrono>
#include <thread>

#include <nlohmann/json.hpp>

#include "cantor/answer_extract.hpp"
#include "cantor/util/digest.hpp"

namespace cantor {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

long ms_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               start)
      .count();
}

BackendRequest make_request(const BackendBinding& binding,
                            const SamplingParams& sampling,
                            const RenderedPrompt& prompt) {
  BackendRequest request;
  request.model_id = binding.model_id;
  request.text = prompt.text;
  request.image = prompt.image;
  request.sampling = sampling;
  return request;
}

json diagnostics_to_json(const ParseDiagnostics& d) {
  json warnings = json::array();
  for (const auto& w : d.warnings) {
    warnings.push_back(json{{"code", w.code},
                            {"message", w.message},
                            {"begin", w.begin},
                            {"end", w.end},
                            {"recovery", w.recovery}});
  }
  return json{{"warnings", warnings},
              {"unknown_modules", d.unknown_modules},
              {"recovered", d.recovered},
              {"reprompt_retries", d.reprompt_retries}};
}

ParseDiagnostics diagnostics_from_json(const json& j) {
  ParseDiagnostics d;
  for (const auto& w : j.value("warnings", json::array())) {
    d.warnings.push_back({w.value("code", ""), w.value("message", ""),
                          w.value("begin", size_t{0}), w.value("end", size_t{0}),
                          w.value("recovery", false)});
  }
  d.unknown_modules = j.value("unknown_modules", std::vector<std::string>{});
  d.recovered = j.value("recovered", false);
  d.reprompt_retries = j.value("reprompt_retries", 0);
  return d;
}

}  // namespace

json trace_to_json(const QueryTrace& trace) {
  json sub_tasks = json::array();
  for (const auto& st : trace.sub_tasks) {
    sub_tasks.push_back(json{
        {"module", std::string(display_name(st.sub_task.module))},
        {"instruction", st.sub_task.instruction},
        {"ordinal", st.sub_task.ordinal},
        {"expert_prompt", st.expert_prompt},
        {"status", std::string(to_string(st.status))},
        {"text", st.text},
        {"latency_ms", st.latency_ms}});
  }
  json j{{"record_id", trace.record_id},
         {"baseline", trace.baseline},
         {"config", to_json(trace.config)},
         {"decision",
          json{{"prompt_digest", trace.decision_prompt_digest},
               {"raw", trace.decision_raw},
               {"parsed", to_json(trace.decision)},
               {"diagnostics", diagnostics_to_json(trace.diagnostics)}}},
         {"sub_tasks", sub_tasks},
         {"supplementary", json{{"rendered", trace.supplementary.rendered}}},
         {"synthesis",
          json{{"prompt_digest", trace.synthesis_prompt_digest},
               {"raw", trace.synthesis_raw}}},
         {"final_answer", to_json(trace.final_answer)},
         {"error", trace.error},
         {"error_code", trace.error_code},
         {"decision_latency_ms", trace.decision_latency_ms},
         {"synthesis_latency_ms", trace.synthesis_latency_ms},
         {"timings", json{{"decision_ms", trace.timings.decision_ms},
                          {"modularization_ms", trace.timings.modularization_ms},
                          {"synthesis_ms", trace.timings.synthesis_ms},
                          {"total_ms", trace.timings.total_ms}}}};
  j["digest"] = trace_digest(trace);
  return j;
}

QueryTrace trace_from_json(const json& j) {
  QueryTrace trace;
  trace.record_id = j.value("record_id", "");
  trace.baseline = j.value("baseline", false);
  if (j.contains("config")) trace.config = config_from_json(j["config"]);
  if (j.contains("decision")) {
    const auto& d = j["decision"];
    trace.decision_prompt_digest = d.value("prompt_digest", "");
    trace.decision_raw = d.value("raw", "");
    if (d.contains("parsed")) trace.decision = decision_from_json(d["parsed"]);
    if (d.contains("diagnostics")) {
      trace.diagnostics = diagnostics_from_json(d["diagnostics"]);
    }
  }
  for (const auto& st : j.value("sub_tasks", json::array())) {
    SubTaskTrace t;
    auto module = normalize_module_name(st.value("module", ""));
    if (module) t.sub_task.module = *module;
    t.sub_task.instruction = st.value("instruction", "");
    t.sub_task.ordinal = st.value("ordinal", 0);
    t.expert_prompt = st.value("expert_prompt", "");
    std::string status = st.value("status", "ok");
    t.status = status == "backend_error"             ? SubAnswerStatus::BackendError
               : status == "skipped_disabled_module" ? SubAnswerStatus::SkippedDisabledModule
                                                     : SubAnswerStatus::Ok;
    t.text = st.value("text", "");
    t.latency_ms = st.value("latency_ms", 0L);
    trace.sub_tasks.push_back(std::move(t));
  }
  // Rebuild the structured pair list from the sub-task traces.
  std::vector<SubAnswer> pairs;
  for (const auto& st : trace.sub_tasks) {
    pairs.push_back({st.sub_task, st.text, st.status});
  }
  trace.supplementary.pairs = std::move(pairs);
  if (j.contains("supplementary")) {
    trace.supplementary.rendered = j["supplementary"].value("rendered", "");
  }
  if (j.contains("synthesis")) {
    trace.synthesis_prompt_digest = j["synthesis"].value("prompt_digest", "");
    trace.synthesis_raw = j["synthesis"].value("raw", "");
  }
  if (j.contains("final_answer")) {
    trace.final_answer = final_answer_from_json(j["final_answer"]);
  }
  trace.error = j.value("error", "");
  trace.error_code = j.value("error_code", "");
  trace.decision_latency_ms = j.value("decision_latency_ms", 0L);
  trace.synthesis_latency_ms = j.value("synthesis_latency_ms", 0L);
  if (j.contains("timings")) {
    const auto& t = j["timings"];
    trace.timings.decision_ms = t.value("decision_ms", 0L);
    trace.timings.modularization_ms = t.value("modularization_ms", 0L);
    trace.timings.synthesis_ms = t.value("synthesis_ms", 0L);
    trace.timings.total_ms = t.value("total_ms", 0L);
  }
  return trace;
}

std::string trace_digest(const QueryTrace& trace) {
  // Canonical form: drop measured timings and per-call latencies so two
  // runs over the same responses digest identically.
  QueryTrace canonical = trace;
  canonical.timings = {};
  for (auto& st : canonical.sub_tasks) st.latency_ms = 0;

  json j = json::object();
  {
    // trace_to_json calls back into trace_digest; build the json body here
    // without the digest field instead.
    json sub_tasks = json::array();
    for (const auto& st : canonical.sub_tasks) {
      sub_tasks.push_back(json{
          {"module", std::string(display_name(st.sub_task.module))},
          {"instruction", st.sub_task.instruction},
          {"ordinal", st.sub_task.ordinal},
          {"expert_prompt", st.expert_prompt},
          {"status", std::string(to_string(st.status))},
          {"text", st.text}});
    }
    j = json{{"record_id", canonical.record_id},
             {"baseline", canonical.baseline},
             {"config", to_json(canonical.config)},
             {"decision",
              json{{"prompt_digest", canonical.decision_prompt_digest},
                   {"raw", canonical.decision_raw},
                   {"parsed", to_json(canonical.decision)},
                   {"diagnostics", diagnostics_to_json(canonical.diagnostics)}}},
             {"sub_tasks", sub_tasks},
             {"supplementary", json{{"rendered", canonical.supplementary.rendered}}},
             {"synthesis",
              json{{"prompt_digest", canonical.synthesis_prompt_digest},
                   {"raw", canonical.synthesis_raw}}},
             {"final_answer", to_json(canonical.final_answer)},
             {"error", canonical.error},
             {"error_code", canonical.error_code}};
  }
  return sha256_hex(j.dump());
}

SupplementaryInfo assemble_supplementary(const std::vector<SubAnswer>& pairs) {
  SupplementaryInfo info;
  info.pairs = pairs;
  size_t index = 0;
  for (const auto& pair : pairs) {
    if (pair.status != SubAnswerStatus::Ok) continue;
    ++index;
    if (!info.rendered.empty()) info.rendered += "\n\n";
    info.rendered += "Sub-task " + std::to_string(index) + ": " +
                     build_expert_prompt(pair.sub_task) + "\nAnswer " +
                     std::to_string(index) + ": " + pair.text;
  }
  return info;
}

std::string AblationMode::label() const {
  switch (kind) {
    case Kind::Full: return "full";
    case Kind::Baseline: return "baseline";
    case Kind::EnableOnly:
      return "enable_only:" + std::string(module_key(module));
    case Kind::DisableOnly:
      return "disable_only:" + std::string(module_key(module));
  }
  return "";
}

RunConfig apply_ablation(const RunConfig& base, const AblationMode& mode) {
  RunConfig config = base;
  config.baseline_mode = false;
  switch (mode.kind) {
    case AblationMode::Kind::Full:
      config.enabled_modules = all_modules();
      break;
    case AblationMode::Kind::Baseline:
      config.baseline_mode = true;
      break;
    case AblationMode::Kind::EnableOnly:
      config.enabled_modules = {mode.module};
      break;
    case AblationMode::Kind::DisableOnly:
      config.enabled_modules = all_modules();
      config.enabled_modules.erase(mode.module);
      break;
  }
  return config;
}

Pipeline::Pipeline(RunConfig config,
                   std::shared_ptr<const PromptLibrary> prompts,
                   BoundBackends backends)
    : config_(std::move(config)),
      prompts_(std::move(prompts)),
      backends_(std::move(backends)) {}

std::vector<SubTaskTrace> Pipeline::modularize_traced(
    const std::vector<SubTask>& sub_tasks, const VisualInput& visual) const {
  std::vector<SubTaskTrace> traced(sub_tasks.size());
  if (sub_tasks.empty()) return traced;

  auto run_one = [&](size_t i) {
    const SubTask& task = sub_tasks[i];
    SubTaskTrace& t = traced[i];
    t.sub_task = task;
    t.expert_prompt = build_expert_prompt(task);
    if (!config_.enabled_modules.count(task.module)) {
      t.status = SubAnswerStatus::SkippedDisabledModule;
      t.text = "module disabled: " + std::string(display_name(task.module));
      return;
    }
    RenderedPrompt prompt{t.expert_prompt, std::nullopt};
    if (visual.level == VisualLevel::Image &&
        backends_.expert->multimodal()) {
      prompt.image = visual.image;
    }
    BackendRequest request =
        make_request(config_.expert_backend, config_.sampling, prompt);
    try {
      BackendResponse response = backends_.expert->complete(request);
      t.status = SubAnswerStatus::Ok;
      t.text = response.text;
      t.latency_ms = response.latency_ms;
    } catch (const BackendError& err) {
      t.status = SubAnswerStatus::BackendError;
      t.text = err.what();
    }
  };

  int workers = std::min<int>(config_.parallelism,
                               static_cast<int>(sub_tasks.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < sub_tasks.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < sub_tasks.size();
             i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& thread : pool) thread.join();
  }
  return traced;
}

std::vector<SubAnswer> Pipeline::run_modularization(
    const std::vector<SubTask>& sub_tasks, const VisualInput& visual) const {
  std::vector<SubAnswer> out;
  for (const auto& t : modularize_traced(sub_tasks, visual)) {
    out.push_back({t.sub_task, t.text, t.status});
  }
  return out;
}

QueryTrace Pipeline::run_query(const QueryRecord& record) const {
  QueryTrace trace;
  trace.record_id = record.id;
  trace.config = config_;
  auto total_start = Clock::now();

  if (config_.baseline_mode) {
    trace.baseline = true;
    RenderedPrompt prompt = build_baseline_prompt(record, config_, *prompts_);
    trace.synthesis_prompt_digest = sha256_hex(prompt.text);
    auto start = Clock::now();
    BackendResponse response = backends_.synthesis->complete(
        make_request(config_.synthesis_backend, config_.sampling, prompt));
    trace.timings.synthesis_ms = ms_since(start);
    trace.synthesis_latency_ms = response.latency_ms;
    trace.synthesis_raw = response.text;
    trace.final_answer = extract_final_answer(response.text, record);
    trace.timings.total_ms = ms_since(total_start);
    return trace;
  }

  // Stage 1: decision generation.
  auto decision_start = Clock::now();
  std::vector<std::string> examples = select_in_context_examples(
      *prompts_, config_.dataset_kind, config_.example_count);
  DecisionPromptResult decision_prompt =
      build_decision_prompt(record, config_, examples, *prompts_);
  trace.decision_prompt_digest = sha256_hex(decision_prompt.prompt.text);
  BackendRequest decision_request = make_request(
      config_.decision_backend, config_.sampling, decision_prompt.prompt);
  BackendResponse decision_response =
      backends_.decision->complete(decision_request);

  ParseOptions parse_options;
  parse_options.enabled = config_.enabled_modules;
  parse_options.policy = config_.disabled_module_policy;

  ParsedDecision parsed;
  try {
    parsed = parse_decision(decision_response.text, parse_options);
  } catch (const ParseError& err) {
    if (std::string_view(err.code()) != "no_tasks_found") throw;
    // One re-prompt retry before accepting an empty S_t.
    BackendRequest retry = decision_request;
    retry.text += "\n\nFollow the exact output format.";
    decision_response = backends_.decision->complete(retry);
    parsed = parse_decision_lenient(decision_response.text, parse_options);
    parsed.diagnostics.reprompt_retries = 1;
  }
  trace.decision_raw = decision_response.text;
  trace.decision = parsed.decision;
  trace.diagnostics = parsed.diagnostics;
  trace.decision_latency_ms = decision_response.latency_ms;
  trace.timings.decision_ms = ms_since(decision_start);

  // Stage 2: modularization. Experts always receive the record's native
  // image (sa_i = G(I, st_i)); the visual-level override shapes only what
  // the decision and synthesis stages see.
  auto mod_start = Clock::now();
  trace.sub_tasks = modularize_traced(parsed.decision.sub_tasks, record.visual);
  trace.timings.modularization_ms = ms_since(mod_start);

  std::vector<SubAnswer> answers;
  for (const auto& t : trace.sub_tasks) {
    answers.push_back({t.sub_task, t.text, t.status});
  }
  trace.supplementary = assemble_supplementary(answers);

  // Stage 3: synthesis.
  auto synth_start = Clock::now();
  SynthesisPromptResult synthesis_prompt = build_synthesis_prompt(
      record, trace.supplementary, config_, *prompts_);
  trace.synthesis_prompt_digest = sha256_hex(synthesis_prompt.prompt.text);
  BackendResponse synthesis_response = backends_.synthesis->complete(
      make_request(config_.synthesis_backend, config_.sampling,
                   synthesis_prompt.prompt));
  trace.synthesis_raw = synthesis_response.text;
  trace.synthesis_latency_ms = synthesis_response.latency_ms;
  trace.final_answer = extract_final_answer(synthesis_response.text, record);
  trace.timings.synthesis_ms = ms_since(synth_start);
  trace.timings.total_ms = ms_since(total_start);
  return trace;
}

EvalResult run_eval(const Pipeline& pipeline,
                    const std::vector<QueryRecord>& records,
                    const EvalOptions& options) {
  EvalResult result;
  result.traces.resize(records.size());
  std::atomic<size_t> next{0};
  std::atomic<size_t> done{0};
  std::atomic<size_t> failed{0};

  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < records.size();
         i = next.fetch_add(1)) {
      if (options.cancel && options.cancel->load()) {
        result.cancelled = true;
        return;
      }
      try {
        result.traces[i] = pipeline.run_query(records[i]);
      } catch (const Error& err) {
        QueryTrace trace;
        trace.record_id = records[i].id;
        trace.config = pipeline.config();
        trace.baseline = pipeline.config().baseline_mode;
        trace.error = err.what();
        trace.error_code = err.code();
        trace.final_answer.raw = "";
        result.traces[i] = std::move(trace);
        failed.fetch_add(1);
      }
      size_t completed = done.fetch_add(1) + 1;
      if (options.progress) options.progress(completed, records.size());
    }
  };

  int workers = std::max(1, std::min<int>(pipeline.config().parallelism,
                                          static_cast<int>(records.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  if (result.cancelled) {
    // Drop records that never started so partial results stay coherent.
    std::vector<QueryTrace> kept;
    for (auto& trace : result.traces) {
      if (!trace.record_id.empty()) kept.push_back(std::move(trace));
    }
    result.traces = std::move(kept);
  }
  result.failed = failed.load();
  return result;
}

}  // namespace cantor
