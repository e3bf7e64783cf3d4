#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cantor {

// ---------------- expert modules ----------------

enum class ExpertModule {
  TextIntelExtractor,
  ObjectQuantLocator,
  VisionIQAnalyst,
  ChartSenseExpert,
};

inline constexpr std::array<ExpertModule, 4> kAllModules = {
    ExpertModule::TextIntelExtractor,
    ExpertModule::ObjectQuantLocator,
    ExpertModule::VisionIQAnalyst,
    ExpertModule::ChartSenseExpert,
};

// Canonical display name, e.g. "TextIntel Extractor".
std::string_view display_name(ExpertModule m);

// Stable snake_case key used in files and JSON, e.g. "textintel_extractor".
std::string_view module_key(ExpertModule m);

// Tolerant mapping of a model-emitted module name to a canonical id.
// Case-insensitive and punctuation/whitespace-insensitive; accepts the
// "TextIntel Extract" spelling variant. nullopt means unknown.
std::optional<ExpertModule> normalize_module_name(std::string_view raw);

std::set<ExpertModule> all_modules();

// ---------------- visual input ----------------

enum class VisualLevel { None, RoughCaption, DetailedCaption, Image };

std::string_view to_string(VisualLevel level);
std::optional<VisualLevel> parse_visual_level(std::string_view s);

struct ImageRef {
  std::string path;        // opaque reference, resolved only by backends
  std::string media_type;  // e.g. "image/png"
  std::string sha256;      // payload digest; cache-key component

  bool operator==(const ImageRef&) const = default;
};

// Exactly the fields implied by `level` are populated.
struct VisualInput {
  VisualLevel level = VisualLevel::None;
  std::string caption;            // caption levels only
  std::optional<ImageRef> image;  // Image level only

  static VisualInput none();
  static VisualInput rough_caption(std::string text);
  static VisualInput detailed_caption(std::string text);
  static VisualInput with_image(ImageRef ref);

  bool is_caption_level() const {
    return level == VisualLevel::RoughCaption ||
           level == VisualLevel::DetailedCaption;
  }

  bool operator==(const VisualInput&) const = default;
};

// ---------------- gold answers / records ----------------

struct GoldAnswer {
  enum class Kind { Choice, Text, Number };

  Kind kind = Kind::Choice;
  int choice_index = -1;              // Choice
  std::string text;                   // Text
  double number = 0.0;                // Number
  std::optional<double> tolerance;    // Number; absent = default relative tol

  static GoldAnswer choice(int index);
  static GoldAnswer free_text(std::string value);
  static GoldAnswer free_number(double value,
                                std::optional<double> tol = std::nullopt);

  bool operator==(const GoldAnswer&) const = default;
};

// Open tag map: key -> one or more values ("subject" -> {"NAT"}, the
// context key may carry both "TXT" and "IMG").
using CategoryTags = std::map<std::string, std::vector<std::string>>;

struct QueryRecord {
  std::string id;
  std::string question;
  std::string context;  // the "hint" portion; may be empty
  std::vector<std::string> options;
  GoldAnswer gold;
  VisualInput visual;
  // Auxiliary captions generated for visual-level sweeps, keyed by level
  // name ("rough_caption" / "detailed_caption"). Independent of visual.level.
  std::map<std::string, std::string> captions;
  CategoryTags categories;
  std::string split;

  bool is_choice() const { return gold.kind == GoldAnswer::Kind::Choice; }

  bool operator==(const QueryRecord&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;
};

// Report-style validation of QueryRecord invariants; empty means valid.
std::vector<Violation> validate_query(const QueryRecord& record);

// ---------------- decisions ----------------

struct SubTask {
  ExpertModule module = ExpertModule::VisionIQAnalyst;
  std::string instruction;  // non-empty after trimming
  int ordinal = 0;          // 0-based position within the decision

  bool operator==(const SubTask&) const = default;
};

struct ModuleSelection {
  ExpertModule module = ExpertModule::VisionIQAnalyst;
  std::string reason;

  bool operator==(const ModuleSelection&) const = default;
};

struct Decision {
  std::string principle_analysis;                 // R
  std::vector<ModuleSelection> module_selections; // O
  std::vector<SubTask> sub_tasks;                 // S_t, model order
  std::string raw;                                // unmodified model output

  // Structural equality on (R, O, S_t); `raw` excluded.
  bool structurally_equal(const Decision& other) const;
};

enum class SubAnswerStatus { Ok, BackendError, SkippedDisabledModule };

std::string_view to_string(SubAnswerStatus s);

struct SubAnswer {
  SubTask sub_task;
  std::string text;  // model response, or error note for non-Ok statuses
  SubAnswerStatus status = SubAnswerStatus::Ok;
};

// Ordered (sub-task, sub-answer) pairs plus the canonical text rendering.
// `pairs` keeps every entry; `rendered` lists only Ok pairs, in order.
struct SupplementaryInfo {
  std::vector<SubAnswer> pairs;
  std::string rendered;
};

struct FreeFormValue {
  enum class Kind { Number, Text };
  Kind kind = Kind::Text;
  double number = 0.0;
  std::string text;

  bool operator==(const FreeFormValue&) const = default;
};

struct FinalAnswer {
  std::string rationale;
  std::optional<int> choice_index;
  std::optional<FreeFormValue> free_form;
  std::string raw;
  std::string error_code;  // extraction error code when unscorable

  bool scorable() const { return choice_index.has_value() || free_form.has_value(); }
};

// ---------------- run configuration ----------------

struct SamplingParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;

  bool operator==(const SamplingParams&) const = default;
};

struct BackendBinding {
  std::string provider = "mock";  // mock | openai | gemini
  std::string model_id = "mock-model";
  bool multimodal = true;
  std::string base_url;  // optional override for http providers

  bool operator==(const BackendBinding&) const = default;
};

enum class DisabledModulePolicy { Error, Skip, FallbackToVisionIQ };

std::string_view to_string(DisabledModulePolicy p);
std::optional<DisabledModulePolicy> parse_policy(std::string_view s);

struct CacheConfig {
  bool enabled = false;
  std::string dir;  // empty -> CANTOR_CACHE_DIR env, else ".cantor-cache"

  bool operator==(const CacheConfig&) const = default;
};

enum class DatasetKind { ScienceQA, MathVista };

std::string_view to_string(DatasetKind k);
std::optional<DatasetKind> parse_dataset_kind(std::string_view s);

struct RunConfig {
  BackendBinding decision_backend;
  BackendBinding expert_backend;
  BackendBinding synthesis_backend;
  std::set<ExpertModule> enabled_modules = {
      ExpertModule::TextIntelExtractor, ExpertModule::ObjectQuantLocator,
      ExpertModule::VisionIQAnalyst, ExpertModule::ChartSenseExpert};
  std::optional<VisualLevel> visual_level;  // override; nullopt = record's own
  SamplingParams sampling;
  DisabledModulePolicy disabled_module_policy = DisabledModulePolicy::Skip;
  CacheConfig cache;
  int parallelism = 1;
  bool baseline_mode = false;  // bypass pipeline: direct question -> answer
  DatasetKind dataset_kind = DatasetKind::ScienceQA;
  int example_count = -1;  // in-context examples; -1 = full pool
  // Whether text-only synthesis backends receive the caption in place of
  // the image (decision stage always substitutes the caption).
  bool caption_for_text_synthesis = true;
  int max_retry_attempts = 3;
  int max_in_flight = 1;  // per-binding concurrency cap

  bool operator==(const RunConfig&) const = default;
};

std::vector<Violation> validate_config(const RunConfig& config);

// ---------------- JSON forms ----------------
// Canonical record schema:
//   {"id","question","context","options","gold":{...},"visual":{...},
//    "captions":{...}?,"categories":{...},"split"}

nlohmann::json to_json(const GoldAnswer&);
GoldAnswer gold_from_json(const nlohmann::json&);

nlohmann::json to_json(const VisualInput&);
VisualInput visual_from_json(const nlohmann::json&);

nlohmann::json to_json(const QueryRecord&);
QueryRecord record_from_json(const nlohmann::json&);

nlohmann::json to_json(const RunConfig&);
RunConfig config_from_json(const nlohmann::json&);

nlohmann::json to_json(const Decision&);
Decision decision_from_json(const nlohmann::json&);

nlohmann::json to_json(const FinalAnswer&);
FinalAnswer final_answer_from_json(const nlohmann::json&);

}  // namespace cantor
