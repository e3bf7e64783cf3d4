#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cantor/domain.hpp"

namespace cantor {

// Marker inserted into prompt text where an image is attached as a
// separate payload (multimodal backends).
inline constexpr std::string_view kImageMarker = "[IMAGE]";

// Marker used in the synthesis prompt when no supplementary pair survived.
inline constexpr std::string_view kNoSupplementaryMarker =
    "No supplementary information available.";

// All prompt texts, loaded from the resource directory. Loading strips
// exactly one trailing newline per file.
struct PromptLibrary {
  std::string decision_preamble;
  std::map<ExpertModule, std::string> module_descriptions;
  std::string rationale_instruction;
  std::string allocation_instruction;
  std::string synthesis_instruction;  // the canonical answer-generation text E
  std::string answer_format_instruction;
  std::string caption_prompt;        // detailed caption
  std::string rough_caption_prompt;
  std::string baseline_instruction;
  std::vector<std::string> scienceqa_examples;  // pool, filename order
  std::vector<std::string> mathvista_examples;
  std::map<std::string, std::string> resource_digests;  // rel path -> sha256

  static PromptLibrary load(const std::filesystem::path& dir);
};

struct DecisionPromptSpec {
  std::string role_preamble;
  std::vector<std::pair<ExpertModule, std::string>> module_descriptions;
  std::string rationale_instruction;
  std::string task_allocation_instruction;
  std::vector<std::string> in_context_examples;
  std::string query_block;
};

struct RenderedPrompt {
  std::string text;
  std::optional<ImageRef> image;  // attached payload (text first, image second)
};

struct SynthesisPromptSpec {
  std::string instruction;  // E, byte-equal to the stored resource
  std::string supplementary;
  std::string query_block;
  std::string answer_format_instruction;
};

// Resolves the record's visual input under the config override.
// Caption-level overrides draw from record.captions (or the record's own
// caption at that level); throws DataError{missing_caption} when absent.
// An Image override on an image-less record degrades to no visual input.
VisualInput effective_visual(const QueryRecord& record,
                             const std::optional<VisualLevel>& override_level);

// Deterministic prefix of the dataset's example pool. count < 0 means the
// full pool. Throws DataError{empty_pool} when the pool is empty and
// count != 0.
std::vector<std::string> select_in_context_examples(const PromptLibrary& lib,
                                                    DatasetKind kind,
                                                    int count);

struct DecisionPromptResult {
  DecisionPromptSpec spec;
  RenderedPrompt prompt;
};

// Assembles the five decision-prompt parts in order: role preamble, one
// description per enabled module, rationale instruction, allocation
// instruction, in-context examples, query block.
DecisionPromptResult build_decision_prompt(const QueryRecord& record,
                                           const RunConfig& config,
                                           const std::vector<std::string>& examples,
                                           const PromptLibrary& lib);

// "[<Display Name>: <instruction>]", exactly.
std::string build_expert_prompt(const SubTask& sub_task);

struct SynthesisPromptResult {
  SynthesisPromptSpec spec;
  RenderedPrompt prompt;
};

SynthesisPromptResult build_synthesis_prompt(const QueryRecord& record,
                                             const SupplementaryInfo& supp,
                                             const RunConfig& config,
                                             const PromptLibrary& lib);

// The caption-generation prompt, verbatim from the resource.
std::string build_caption_prompt(const PromptLibrary& lib,
                                 VisualLevel level = VisualLevel::DetailedCaption);

// Direct question->answer prompt for baseline mode.
RenderedPrompt build_baseline_prompt(const QueryRecord& record,
                                     const RunConfig& config,
                                     const PromptLibrary& lib);

}  // namespace cantor
