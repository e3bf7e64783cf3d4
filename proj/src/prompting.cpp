#include "cantor/prompting.hpp"

#include <algorithm>

#include "cantor/errors.hpp"
#include "cantor/util/digest.hpp"
#include "cantor/util/fs.hpp"

namespace cantor {

namespace {

std::string load_resource(const std::filesystem::path& dir,
                          const std::string& rel,
                          std::map<std::string, std::string>& digests) {
  std::string content = read_file(dir / rel);
  digests[rel] = sha256_hex(content);
  if (!content.empty() && content.back() == '\n') content.pop_back();
  if (!content.empty() && content.back() == '\r') content.pop_back();
  return content;
}

std::vector<std::string> load_pool(const std::filesystem::path& dir,
                                   const std::string& rel,
                                   std::map<std::string, std::string>& digests) {
  std::vector<std::string> names;
  std::filesystem::path pool_dir = dir / rel;
  if (std::filesystem::is_directory(pool_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(pool_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        names.push_back(entry.path().filename().string());
      }
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<std::string> pool;
  for (const auto& name : names) {
    pool.push_back(load_resource(dir, rel + "/" + name, digests));
  }
  return pool;
}

// Letter label for option i: (A), (B), ...
std::string option_letter(size_t i) {
  std::string s = "(";
  s.push_back(static_cast<char>('A' + i));
  s += ")";
  return s;
}

std::string render_options(const std::vector<std::string>& options) {
  std::string out = "Options:";
  for (size_t i = 0; i < options.size(); ++i) {
    out += " " + option_letter(i) + " " + options[i];
  }
  return out;
}

// The shared query block: visual slot, question, context, options.
// For multimodal backends an Image-level visual renders the attachment
// marker; text-only backends get the caption line.
std::string render_query_block(const QueryRecord& record,
                               const VisualInput& visual, bool multimodal) {
  std::string out;
  if (visual.level == VisualLevel::Image) {
    if (!multimodal) {
      throw ConfigError(
          "text-only backend cannot receive image-level visual input for "
          "record " + record.id + "; use a caption-level visual_level");
    }
    out += std::string(kImageMarker) + "\n";
  } else if (visual.is_caption_level()) {
    out += "Image Caption: " + visual.caption + "\n";
  }
  out += "Question: " + record.question;
  if (!record.context.empty()) {
    out += "\nContext: " + record.context;
  }
  if (!record.options.empty()) {
    out += "\n" + render_options(record.options);
  }
  return out;
}

std::optional<ImageRef> attachment_for(const VisualInput& visual,
                                       bool multimodal) {
  if (multimodal && visual.level == VisualLevel::Image) return visual.image;
  return std::nullopt;
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  auto& d = lib.resource_digests;
  lib.decision_preamble = load_resource(dir, "decision_preamble.txt", d);
  for (ExpertModule m : kAllModules) {
    lib.module_descriptions[m] = load_resource(
        dir, "module_desc/" + std::string(module_key(m)) + ".txt", d);
  }
  lib.rationale_instruction = load_resource(dir, "rationale.txt", d);
  lib.allocation_instruction = load_resource(dir, "allocation.txt", d);
  lib.synthesis_instruction = load_resource(dir, "synthesis_E.txt", d);
  lib.answer_format_instruction = load_resource(dir, "answer_format.txt", d);
  lib.caption_prompt = load_resource(dir, "caption.txt", d);
  lib.rough_caption_prompt = load_resource(dir, "caption_rough.txt", d);
  lib.baseline_instruction = load_resource(dir, "baseline.txt", d);
  lib.scienceqa_examples = load_pool(dir, "examples/scienceqa", d);
  lib.mathvista_examples = load_pool(dir, "examples/mathvista", d);
  return lib;
}

VisualInput effective_visual(const QueryRecord& record,
                             const std::optional<VisualLevel>& override_level) {
  if (!override_level) return record.visual;
  switch (*override_level) {
    case VisualLevel::None:
      return VisualInput::none();
    case VisualLevel::Image:
      // Records without an image carry no visual input at this level.
      if (record.visual.level == VisualLevel::Image) return record.visual;
      return VisualInput::none();
    case VisualLevel::RoughCaption:
    case VisualLevel::DetailedCaption: {
      std::string key(to_string(*override_level));
      if (auto it = record.captions.find(key); it != record.captions.end()) {
        VisualInput v;
        v.level = *override_level;
        v.caption = it->second;
        return v;
      }
      if (record.visual.level == *override_level) return record.visual;
      throw DataError("missing_caption",
                      "record " + record.id + " has no " + key);
    }
  }
  return VisualInput::none();
}

std::vector<std::string> select_in_context_examples(const PromptLibrary& lib,
                                                    DatasetKind kind,
                                                    int count) {
  const auto& pool = kind == DatasetKind::ScienceQA ? lib.scienceqa_examples
                                                    : lib.mathvista_examples;
  if (count == 0) return {};
  if (pool.empty()) {
    throw DataError("empty_pool", "no in-context examples for dataset " +
                                      std::string(to_string(kind)));
  }
  size_t n = count < 0 ? pool.size()
                       : std::min(pool.size(), static_cast<size_t>(count));
  return {pool.begin(), pool.begin() + static_cast<long>(n)};
}

DecisionPromptResult build_decision_prompt(const QueryRecord& record,
                                           const RunConfig& config,
                                           const std::vector<std::string>& examples,
                                           const PromptLibrary& lib) {
  VisualInput visual = effective_visual(record, config.visual_level);
  bool multimodal = config.decision_backend.multimodal;
  // Text-only decision backends always get the caption in the visual slot.
  DecisionPromptSpec spec;
  spec.role_preamble = lib.decision_preamble;
  for (ExpertModule m : kAllModules) {
    if (config.enabled_modules.count(m)) {
      spec.module_descriptions.emplace_back(m, lib.module_descriptions.at(m));
    }
  }
  spec.rationale_instruction = lib.rationale_instruction;
  spec.task_allocation_instruction = lib.allocation_instruction;
  spec.in_context_examples = examples;
  spec.query_block = render_query_block(record, visual, multimodal);

  std::string text = spec.role_preamble;
  for (const auto& [m, desc] : spec.module_descriptions) {
    text += "\n\n" + desc;
  }
  text += "\n\n" + spec.rationale_instruction;
  text += "\n\n" + spec.task_allocation_instruction;
  for (const auto& ex : spec.in_context_examples) {
    text += "\n\n" + ex;
  }
  text += "\n\n" + spec.query_block;

  return {std::move(spec),
          RenderedPrompt{std::move(text), attachment_for(visual, multimodal)}};
}

std::string build_expert_prompt(const SubTask& sub_task) {
  return "[" + std::string(display_name(sub_task.module)) + ": " +
         sub_task.instruction + "]";
}

SynthesisPromptResult build_synthesis_prompt(const QueryRecord& record,
                                             const SupplementaryInfo& supp,
                                             const RunConfig& config,
                                             const PromptLibrary& lib) {
  VisualInput visual = effective_visual(record, config.visual_level);
  bool multimodal = config.synthesis_backend.multimodal;
  if (!multimodal && visual.level == VisualLevel::Image) {
    // X' includes I; text-only synthesis substitutes the detailed caption
    // when available (config switch), else drops the visual slot.
    if (config.caption_for_text_synthesis) {
      auto it = record.captions.find(std::string(to_string(VisualLevel::DetailedCaption)));
      visual = it != record.captions.end()
                   ? VisualInput::detailed_caption(it->second)
                   : VisualInput::none();
    } else {
      visual = VisualInput::none();
    }
  }

  SynthesisPromptSpec spec;
  spec.instruction = lib.synthesis_instruction;
  spec.supplementary =
      supp.rendered.empty() ? std::string(kNoSupplementaryMarker) : supp.rendered;
  spec.query_block = render_query_block(record, visual, multimodal);
  spec.answer_format_instruction = lib.answer_format_instruction;

  std::string text = spec.instruction;
  text += "\n\n" + spec.query_block;
  text += "\n\nSupplementary Information:\n" + spec.supplementary;
  text += "\n\n" + spec.answer_format_instruction;

  return {std::move(spec),
          RenderedPrompt{std::move(text), attachment_for(visual, multimodal)}};
}

std::string build_caption_prompt(const PromptLibrary& lib, VisualLevel level) {
  if (level == VisualLevel::RoughCaption) return lib.rough_caption_prompt;
  return lib.caption_prompt;
}

RenderedPrompt build_baseline_prompt(const QueryRecord& record,
                                     const RunConfig& config,
                                     const PromptLibrary& lib) {
  VisualInput visual = effective_visual(record, config.visual_level);
  bool multimodal = config.synthesis_backend.multimodal;
  std::string text = render_query_block(record, visual, multimodal);
  text += "\n\n" + lib.baseline_instruction;
  text += "\n\n" + lib.answer_format_instruction;
  return RenderedPrompt{std::move(text), attachment_for(visual, multimodal)};
}

}  // namespace cantor
