#include "cantor/domain.hpp"

#include <nlohmann/json.hpp>

#include "cantor/errors.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

using nlohmann::json;

// ---------------- expert modules ----------------

std::string_view display_name(ExpertModule m) {
  switch (m) {
    case ExpertModule::TextIntelExtractor: return "TextIntel Extractor";
    case ExpertModule::ObjectQuantLocator: return "ObjectQuant Locator";
    case ExpertModule::VisionIQAnalyst: return "VisionIQ Analyst";
    case ExpertModule::ChartSenseExpert: return "ChartSense Expert";
  }
  return "";
}

std::string_view module_key(ExpertModule m) {
  switch (m) {
    case ExpertModule::TextIntelExtractor: return "textintel_extractor";
    case ExpertModule::ObjectQuantLocator: return "objectquant_locator";
    case ExpertModule::VisionIQAnalyst: return "visioniq_analyst";
    case ExpertModule::ChartSenseExpert: return "chartsense_expert";
  }
  return "";
}

std::optional<ExpertModule> normalize_module_name(std::string_view raw) {
  std::string key = squash_alnum(raw);
  if (key.empty()) return std::nullopt;
  // "TextIntel Extract" and "TextIntel Extractor" are both canonical in
  // different places; accept either spelling.
  if (key == "textintelextractor" || key == "textintelextract") {
    return ExpertModule::TextIntelExtractor;
  }
  if (key == "objectquantlocator") return ExpertModule::ObjectQuantLocator;
  if (key == "visioniqanalyst") return ExpertModule::VisionIQAnalyst;
  if (key == "chartsenseexpert") return ExpertModule::ChartSenseExpert;
  return std::nullopt;
}

std::set<ExpertModule> all_modules() {
  return {kAllModules.begin(), kAllModules.end()};
}

// ---------------- visual input ----------------

std::string_view to_string(VisualLevel level) {
  switch (level) {
    case VisualLevel::None: return "none";
    case VisualLevel::RoughCaption: return "rough_caption";
    case VisualLevel::DetailedCaption: return "detailed_caption";
    case VisualLevel::Image: return "image";
  }
  return "";
}

std::optional<VisualLevel> parse_visual_level(std::string_view s) {
  std::string k = squash_alnum(s);
  if (k == "none" || k == "novisualinformation") return VisualLevel::None;
  if (k == "roughcaption" || k == "rough") return VisualLevel::RoughCaption;
  if (k == "detailedcaption" || k == "detailed") return VisualLevel::DetailedCaption;
  if (k == "image") return VisualLevel::Image;
  return std::nullopt;
}

VisualInput VisualInput::none() { return VisualInput{}; }

VisualInput VisualInput::rough_caption(std::string text) {
  VisualInput v;
  v.level = VisualLevel::RoughCaption;
  v.caption = std::move(text);
  return v;
}

VisualInput VisualInput::detailed_caption(std::string text) {
  VisualInput v;
  v.level = VisualLevel::DetailedCaption;
  v.caption = std::move(text);
  return v;
}

VisualInput VisualInput::with_image(ImageRef ref) {
  VisualInput v;
  v.level = VisualLevel::Image;
  v.image = std::move(ref);
  return v;
}

// ---------------- gold answers ----------------

GoldAnswer GoldAnswer::choice(int index) {
  GoldAnswer g;
  g.kind = Kind::Choice;
  g.choice_index = index;
  return g;
}

GoldAnswer GoldAnswer::free_text(std::string value) {
  GoldAnswer g;
  g.kind = Kind::Text;
  g.text = std::move(value);
  return g;
}

GoldAnswer GoldAnswer::free_number(double value, std::optional<double> tol) {
  GoldAnswer g;
  g.kind = Kind::Number;
  g.number = value;
  g.tolerance = tol;
  return g;
}

// ---------------- validation ----------------

std::vector<Violation> validate_query(const QueryRecord& record) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string rule) {
    out.push_back({std::move(field), std::move(rule)});
  };

  if (record.id.empty()) add("id", "must be non-empty");
  if (trim_view(record.question).empty()) add("question", "must be non-empty");

  if (record.gold.kind == GoldAnswer::Kind::Choice) {
    if (record.options.empty()) {
      add("options", "choice records require non-empty options");
    } else if (record.gold.choice_index < 0 ||
               record.gold.choice_index >=
                   static_cast<int>(record.options.size())) {
      add("gold.index", "gold out of range");
    }
  } else {
    if (!record.options.empty()) {
      add("options", "options must be empty for free-form");
    }
    if (record.gold.kind == GoldAnswer::Kind::Text &&
        trim_view(record.gold.text).empty()) {
      add("gold.value", "free-text gold must be non-empty");
    }
  }

  switch (record.visual.level) {
    case VisualLevel::None:
      if (!record.visual.caption.empty()) {
        add("visual.caption", "caption must be absent at level none");
      }
      if (record.visual.image.has_value()) {
        add("visual.image", "image must be absent at level none");
      }
      break;
    case VisualLevel::RoughCaption:
    case VisualLevel::DetailedCaption:
      if (trim_view(record.visual.caption).empty()) {
        add("visual.caption", "caption required at caption levels");
      }
      if (record.visual.image.has_value()) {
        add("visual.image", "image must be absent at caption levels");
      }
      break;
    case VisualLevel::Image:
      if (!record.visual.caption.empty()) {
        add("visual.caption", "caption must be absent at level image");
      }
      if (!record.visual.image.has_value()) {
        add("visual.image", "image required at level image");
      } else {
        if (record.visual.image->path.empty()) {
          add("visual.image.path", "must be non-empty");
        }
        if (record.visual.image->sha256.empty()) {
          add("visual.image.sha256", "must be non-empty");
        }
      }
      break;
  }

  return out;
}

bool Decision::structurally_equal(const Decision& other) const {
  return principle_analysis == other.principle_analysis &&
         module_selections == other.module_selections &&
         sub_tasks == other.sub_tasks;
}

std::string_view to_string(SubAnswerStatus s) {
  switch (s) {
    case SubAnswerStatus::Ok: return "ok";
    case SubAnswerStatus::BackendError: return "backend_error";
    case SubAnswerStatus::SkippedDisabledModule: return "skipped_disabled_module";
  }
  return "";
}

// ---------------- run configuration ----------------

std::string_view to_string(DisabledModulePolicy p) {
  switch (p) {
    case DisabledModulePolicy::Error: return "error";
    case DisabledModulePolicy::Skip: return "skip";
    case DisabledModulePolicy::FallbackToVisionIQ: return "fallback_to_visioniq";
  }
  return "";
}

std::optional<DisabledModulePolicy> parse_policy(std::string_view s) {
  std::string k = squash_alnum(s);
  if (k == "error") return DisabledModulePolicy::Error;
  if (k == "skip") return DisabledModulePolicy::Skip;
  if (k == "fallbacktovisioniq" || k == "fallback") {
    return DisabledModulePolicy::FallbackToVisionIQ;
  }
  return std::nullopt;
}

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::ScienceQA: return "scienceqa";
    case DatasetKind::MathVista: return "mathvista";
  }
  return "";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view s) {
  std::string k = squash_alnum(s);
  if (k == "scienceqa") return DatasetKind::ScienceQA;
  if (k == "mathvista") return DatasetKind::MathVista;
  return std::nullopt;
}

std::vector<Violation> validate_config(const RunConfig& config) {
  std::vector<Violation> out;
  if (config.enabled_modules.empty() && !config.baseline_mode) {
    out.push_back({"enabled_modules", "must be non-empty unless baseline_mode"});
  }
  if (config.parallelism < 1) {
    out.push_back({"parallelism", "must be >= 1"});
  }
  if (config.max_retry_attempts < 1) {
    out.push_back({"max_retry_attempts", "must be >= 1"});
  }
  if (config.max_in_flight < 1) {
    out.push_back({"max_in_flight", "must be >= 1"});
  }
  if (config.sampling.max_tokens < 1) {
    out.push_back({"sampling.max_tokens", "must be >= 1"});
  }
  return out;
}

// ---------------- JSON forms ----------------

namespace {

json sampling_to_json(const SamplingParams& s) {
  json j{{"temperature", s.temperature}, {"max_tokens", s.max_tokens}};
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

SamplingParams sampling_from_json(const json& j) {
  SamplingParams s;
  s.temperature = j.value("temperature", 0.0);
  s.max_tokens = j.value("max_tokens", 1024);
  if (j.contains("seed") && !j["seed"].is_null()) {
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

json binding_to_json(const BackendBinding& b) {
  json j{{"provider", b.provider},
         {"model_id", b.model_id},
         {"multimodal", b.multimodal}};
  if (!b.base_url.empty()) j["base_url"] = b.base_url;
  return j;
}

BackendBinding binding_from_json(const json& j) {
  BackendBinding b;
  b.provider = j.value("provider", "mock");
  b.model_id = j.value("model_id", "mock-model");
  b.multimodal = j.value("multimodal", true);
  b.base_url = j.value("base_url", "");
  return b;
}

ExpertModule module_from_name(const std::string& name) {
  auto m = normalize_module_name(name);
  if (!m) throw DataError("source_schema", "unknown expert module: " + name);
  return *m;
}

}  // namespace

json to_json(const GoldAnswer& g) {
  switch (g.kind) {
    case GoldAnswer::Kind::Choice:
      return json{{"kind", "choice"}, {"index", g.choice_index}};
    case GoldAnswer::Kind::Text:
      return json{{"kind", "text"}, {"value", g.text}};
    case GoldAnswer::Kind::Number: {
      json j{{"kind", "number"}, {"value", g.number}};
      if (g.tolerance) j["tolerance"] = *g.tolerance;
      return j;
    }
  }
  return json{};
}

GoldAnswer gold_from_json(const json& j) {
  std::string kind = j.value("kind", "");
  if (kind == "choice") return GoldAnswer::choice(j.at("index").get<int>());
  if (kind == "text") return GoldAnswer::free_text(j.at("value").get<std::string>());
  if (kind == "number") {
    std::optional<double> tol;
    if (j.contains("tolerance") && !j["tolerance"].is_null()) {
      tol = j["tolerance"].get<double>();
    }
    return GoldAnswer::free_number(j.at("value").get<double>(), tol);
  }
  throw DataError("source_schema", "unknown gold kind: " + kind);
}

json to_json(const VisualInput& v) {
  json j{{"level", std::string(to_string(v.level))}};
  if (v.is_caption_level()) j["caption"] = v.caption;
  if (v.level == VisualLevel::Image && v.image) {
    j["path"] = v.image->path;
    j["media_type"] = v.image->media_type;
    j["sha256"] = v.image->sha256;
  }
  return j;
}

VisualInput visual_from_json(const json& j) {
  auto level = parse_visual_level(j.value("level", "none"));
  if (!level) {
    throw DataError("source_schema", "unknown visual level: " + j.value("level", ""));
  }
  VisualInput v;
  v.level = *level;
  if (v.is_caption_level()) v.caption = j.value("caption", "");
  if (v.level == VisualLevel::Image) {
    ImageRef ref;
    ref.path = j.value("path", "");
    ref.media_type = j.value("media_type", "");
    ref.sha256 = j.value("sha256", "");
    v.image = std::move(ref);
  }
  return v;
}

json to_json(const QueryRecord& r) {
  json j{{"id", r.id},
         {"question", r.question},
         {"context", r.context},
         {"options", r.options},
         {"gold", to_json(r.gold)},
         {"visual", to_json(r.visual)},
         {"categories", r.categories},
         {"split", r.split}};
  if (!r.captions.empty()) j["captions"] = r.captions;
  return j;
}

QueryRecord record_from_json(const json& j) {
  QueryRecord r;
  r.id = j.at("id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.context = j.value("context", "");
  r.options = j.value("options", std::vector<std::string>{});
  r.gold = gold_from_json(j.at("gold"));
  r.visual = visual_from_json(j.at("visual"));
  if (j.contains("captions")) {
    r.captions = j["captions"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("categories")) {
    r.categories = j["categories"].get<CategoryTags>();
  }
  r.split = j.value("split", "");
  return r;
}

json to_json(const RunConfig& c) {
  std::vector<std::string> enabled;
  for (ExpertModule m : kAllModules) {
    if (c.enabled_modules.count(m)) enabled.emplace_back(display_name(m));
  }
  json j{{"decision_backend", binding_to_json(c.decision_backend)},
         {"expert_backend", binding_to_json(c.expert_backend)},
         {"synthesis_backend", binding_to_json(c.synthesis_backend)},
         {"enabled_modules", enabled},
         {"sampling", sampling_to_json(c.sampling)},
         {"disabled_module_policy", std::string(to_string(c.disabled_module_policy))},
         {"cache", json{{"enabled", c.cache.enabled}, {"dir", c.cache.dir}}},
         {"parallelism", c.parallelism},
         {"baseline_mode", c.baseline_mode},
         {"dataset_kind", std::string(to_string(c.dataset_kind))},
         {"example_count", c.example_count},
         {"caption_for_text_synthesis", c.caption_for_text_synthesis},
         {"max_retry_attempts", c.max_retry_attempts},
         {"max_in_flight", c.max_in_flight}};
  j["visual_level"] =
      c.visual_level ? json(std::string(to_string(*c.visual_level))) : json(nullptr);
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("decision_backend")) c.decision_backend = binding_from_json(j["decision_backend"]);
  if (j.contains("expert_backend")) c.expert_backend = binding_from_json(j["expert_backend"]);
  if (j.contains("synthesis_backend")) c.synthesis_backend = binding_from_json(j["synthesis_backend"]);
  if (j.contains("enabled_modules")) {
    c.enabled_modules.clear();
    for (const auto& name : j["enabled_modules"]) {
      c.enabled_modules.insert(module_from_name(name.get<std::string>()));
    }
  }
  if (j.contains("visual_level") && !j["visual_level"].is_null()) {
    auto level = parse_visual_level(j["visual_level"].get<std::string>());
    if (!level) {
      throw ConfigError("unknown visual_level: " + j["visual_level"].get<std::string>());
    }
    c.visual_level = level;
  }
  if (j.contains("sampling")) c.sampling = sampling_from_json(j["sampling"]);
  if (j.contains("disabled_module_policy")) {
    auto p = parse_policy(j["disabled_module_policy"].get<std::string>());
    if (!p) {
      throw ConfigError("unknown disabled_module_policy: " +
                        j["disabled_module_policy"].get<std::string>());
    }
    c.disabled_module_policy = *p;
  }
  if (j.contains("cache")) {
    c.cache.enabled = j["cache"].value("enabled", false);
    c.cache.dir = j["cache"].value("dir", "");
  }
  c.parallelism = j.value("parallelism", 1);
  c.baseline_mode = j.value("baseline_mode", false);
  if (j.contains("dataset_kind")) {
    auto k = parse_dataset_kind(j["dataset_kind"].get<std::string>());
    if (!k) {
      throw ConfigError("unknown dataset_kind: " + j["dataset_kind"].get<std::string>());
    }
    c.dataset_kind = *k;
  }
  c.example_count = j.value("example_count", -1);
  c.caption_for_text_synthesis = j.value("caption_for_text_synthesis", true);
  c.max_retry_attempts = j.value("max_retry_attempts", 3);
  c.max_in_flight = j.value("max_in_flight", 1);
  return c;
}

json to_json(const Decision& d) {
  json selections = json::array();
  for (const auto& sel : d.module_selections) {
    selections.push_back(json{{"module", std::string(display_name(sel.module))},
                              {"reason", sel.reason}});
  }
  json tasks = json::array();
  for (const auto& t : d.sub_tasks) {
    tasks.push_back(json{{"module", std::string(display_name(t.module))},
                         {"instruction", t.instruction},
                         {"ordinal", t.ordinal}});
  }
  return json{{"principle_analysis", d.principle_analysis},
              {"module_selections", selections},
              {"sub_tasks", tasks},
              {"raw", d.raw}};
}

Decision decision_from_json(const json& j) {
  Decision d;
  d.principle_analysis = j.value("principle_analysis", "");
  for (const auto& sel : j.value("module_selections", json::array())) {
    d.module_selections.push_back(
        {module_from_name(sel.at("module").get<std::string>()),
         sel.value("reason", "")});
  }
  int ordinal = 0;
  for (const auto& t : j.value("sub_tasks", json::array())) {
    SubTask st;
    st.module = module_from_name(t.at("module").get<std::string>());
    st.instruction = t.at("instruction").get<std::string>();
    st.ordinal = t.value("ordinal", ordinal);
    d.sub_tasks.push_back(std::move(st));
    ++ordinal;
  }
  d.raw = j.value("raw", "");
  return d;
}

json to_json(const FinalAnswer& a) {
  json j{{"rationale", a.rationale}, {"raw", a.raw}};
  j["choice_index"] = a.choice_index ? json(*a.choice_index) : json(nullptr);
  if (a.free_form) {
    if (a.free_form->kind == FreeFormValue::Kind::Number) {
      j["free_form"] = json{{"kind", "number"}, {"value", a.free_form->number}};
    } else {
      j["free_form"] = json{{"kind", "text"}, {"value", a.free_form->text}};
    }
  } else {
    j["free_form"] = nullptr;
  }
  if (!a.error_code.empty()) j["error_code"] = a.error_code;
  return j;
}

FinalAnswer final_answer_from_json(const json& j) {
  FinalAnswer a;
  a.rationale = j.value("rationale", "");
  a.raw = j.value("raw", "");
  if (j.contains("choice_index") && !j["choice_index"].is_null()) {
    a.choice_index = j["choice_index"].get<int>();
  }
  if (j.contains("free_form") && !j["free_form"].is_null()) {
    FreeFormValue v;
    if (j["free_form"].value("kind", "") == "number") {
      v.kind = FreeFormValue::Kind::Number;
      v.number = j["free_form"].at("value").get<double>();
    } else {
      v.kind = FreeFormValue::Kind::Text;
      v.text = j["free_form"].at("value").get<std::string>();
    }
    a.free_form = std::move(v);
  }
  a.error_code = j.value("error_code", "");
  return a;
}

}  // namespace cantor
