#pragma once

#include <string>
#include <vector>

#include "cantor/domain.hpp"
#include "cantor/util/digest.hpp"

namespace cantor::test {

// Fixed record behind the golden decision-prompt files. Any change here
// requires regenerating tests/golden/ (CANTOR_REGEN_GOLDEN=1).
inline QueryRecord golden_record() {
  QueryRecord record;
  record.id = "fixture-001";
  record.question = "Which of these states is farthest north?";
  record.context = "Figure: a map of the United States.";
  record.options = {"West Virginia", "Louisiana", "Arizona", "Oklahoma"};
  record.gold = GoldAnswer::choice(0);
  ImageRef ref;
  ref.path = "images/fixture-001.png";
  ref.media_type = "image/png";
  ref.sha256 = sha256_hex("fixture-001-image");
  record.visual = VisualInput::with_image(std::move(ref));
  record.captions["detailed_caption"] =
      "A map of the United States with one state highlighted in dark green.";
  record.categories["subject"] = {"SOC"};
  record.categories["grade"] = {"G1-6"};
  record.categories["context"] = {"TXT", "IMG"};
  record.split = "test";
  return record;
}

inline std::vector<std::string> golden_examples() {
  return {"Question: How many marbles are in the jar?\n\n"
          "Principle Analysis:\nCounting the marbles settles the question.\n\n"
          "Module Selection & Reason:\nObjectQuant Locator: counting task\n\n"
          "Task Allocation:\n[ObjectQuant Locator: How many marbles are in the jar?]"};
}

}  // namespace cantor::test
