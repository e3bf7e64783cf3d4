#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cantor/backends.hpp"
#include "cantor/domain.hpp"
#include "cantor/pipeline.hpp"
#include "cantor/prompting.hpp"
#include "cantor/util/digest.hpp"
#include "cantor/util/fs.hpp"

namespace cantor::test {

inline std::filesystem::path prompts_dir() { return CANTOR_PROMPTS_DIR; }
inline std::filesystem::path fixtures_dir() { return CANTOR_FIXTURES_DIR; }
inline std::filesystem::path golden_dir() { return CANTOR_GOLDEN_DIR; }

inline std::shared_ptr<const PromptLibrary> shared_prompts() {
  static auto lib = std::make_shared<const PromptLibrary>(
      PromptLibrary::load(prompts_dir()));
  return lib;
}

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    path = base / ("cantor_test_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline QueryRecord make_choice_record(std::string id, int gold_index,
                                      int option_count = 4) {
  QueryRecord record;
  record.id = std::move(id);
  record.question = "Which option is correct for item " + record.id + "?";
  for (int i = 0; i < option_count; ++i) {
    record.options.push_back("option " + std::to_string(i) + " of " + record.id);
  }
  record.gold = GoldAnswer::choice(gold_index);
  record.split = "test";
  record.categories["subject"] = {"NAT"};
  record.categories["grade"] = {"G1-6"};
  record.categories["context"] = {"NO"};
  return record;
}

inline QueryRecord with_image(QueryRecord record) {
  ImageRef ref;
  ref.path = "images/" + record.id + ".png";
  ref.media_type = "image/png";
  ref.sha256 = sha256_hex("image-payload-" + record.id);
  record.visual = VisualInput::with_image(std::move(ref));
  auto& context = record.categories["context"];
  context = {"IMG"};
  return record;
}

// Canonical decision text with one task line per (module, instruction).
inline std::string decision_text(
    const std::vector<std::pair<ExpertModule, std::string>>& tasks,
    const std::string& principle = "The question needs one visual fact.") {
  std::string out = "Principle Analysis:\n" + principle +
                    "\n\nModule Selection & Reason:\n";
  for (const auto& [module, instruction] : tasks) {
    out += std::string(display_name(module)) + ": needed for this question\n";
  }
  out += "\nTask Allocation:\n";
  for (const auto& [module, instruction] : tasks) {
    out += "[" + std::string(display_name(module)) + ": " + instruction + "]\n";
  }
  return out;
}

// Mock stack whose decision emits `tasks`, experts answer with a fixed
// function of the instruction, and synthesis emits `synthesis_answer`.
struct MockStack {
  std::shared_ptr<MockBackend> decision;
  std::shared_ptr<MockBackend> expert;
  std::shared_ptr<MockBackend> synthesis;

  BoundBackends bound() const { return {decision, expert, synthesis}; }
};

inline MockStack make_mock_stack(
    const std::vector<std::pair<ExpertModule, std::string>>& tasks,
    const std::string& synthesis_answer = "Rationale.\nAnswer: (A)") {
  MockStack stack;
  stack.decision = MockBackend::constant(decision_text(tasks));
  stack.expert = std::make_shared<MockBackend>([](const BackendRequest& r) {
    return "expert answer for " + sha256_hex(r.text).substr(0, 8);
  });
  stack.synthesis = MockBackend::constant(synthesis_answer);
  return stack;
}

inline RunConfig mock_config() {
  RunConfig config;
  config.decision_backend = {"mock", "mock-decision", true, ""};
  config.expert_backend = {"mock", "mock-expert", true, ""};
  config.synthesis_backend = {"mock", "mock-synthesis", true, ""};
  config.example_count = 1;
  return config;
}

// ---------------- random decisions for round-trip properties ----------------

inline const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> words = {
      "ocean",  "mineral", "signal",  "pattern", "sample", "figure",
      "green",  "measure", "between", "compare", "value",  "region",
      "crystal", "photo",  "window",  "spring",  "circuit", "stone",
      "needle", "harbor"};
  return words;
}

inline std::string random_words(std::mt19937& rng, int min_words,
                                int max_words, bool allow_punct) {
  std::uniform_int_distribution<int> count(min_words, max_words);
  std::uniform_int_distribution<size_t> pick(0, lexicon().size() - 1);
  std::uniform_int_distribution<int> punct(0, 9);
  static const std::vector<std::string> puncts = {",", ";", ")", "(",
                                                  "]", ":", "%"};
  std::string out;
  int n = count(rng);
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += lexicon()[pick(rng)];
    if (allow_punct && punct(rng) == 0) {
      out += puncts[punct(rng) % puncts.size()];
    }
  }
  return out;
}

// Structurally valid Decision: every task module appears in the
// selections; instructions/reasons are trimmed single-line text.
inline Decision random_decision(std::mt19937& rng) {
  Decision d;
  std::uniform_int_distribution<int> r_lines(0, 3);
  int lines = r_lines(rng);
  for (int i = 0; i < lines; ++i) {
    if (!d.principle_analysis.empty()) d.principle_analysis += '\n';
    d.principle_analysis += random_words(rng, 1, 8, false);
  }

  std::vector<ExpertModule> modules(kAllModules.begin(), kAllModules.end());
  std::shuffle(modules.begin(), modules.end(), rng);
  std::uniform_int_distribution<int> k_dist(0, 4);
  int k = k_dist(rng);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> has_reason(0, 4);
    d.module_selections.push_back(
        {modules[static_cast<size_t>(i)],
         has_reason(rng) == 0 ? "" : random_words(rng, 1, 8, true)});
  }

  if (k > 0) {
    std::uniform_int_distribution<int> t_dist(0, 6);
    std::uniform_int_distribution<int> m_dist(0, k - 1);
    int t = t_dist(rng);
    for (int i = 0; i < t; ++i) {
      SubTask task;
      task.module = modules[static_cast<size_t>(m_dist(rng))];
      task.instruction = random_words(rng, 1, 10, true);
      if (task.instruction.empty()) task.instruction = "measure the sample";
      task.ordinal = i;
      d.sub_tasks.push_back(std::move(task));
    }
  }
  return d;
}

}  // namespace cantor::test
