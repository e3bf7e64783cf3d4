#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cantor::test {

// Hand-checked extraction corpus: 10 items per rule plus 10 adversarial
// items that must yield typed errors (never a silent wrong pick).
struct ChoiceCase {
  std::string raw;
  std::vector<std::string> options;
  std::optional<int> expected;    // nullopt -> expected_error
  std::string expected_error;    // extraction error code
  int rule;                       // 1..3, 0 for adversarial
};

inline std::vector<ChoiceCase> choice_corpus() {
  const std::vector<std::string> opts4 = {"red fox", "gray wolf", "brown bear",
                                          "sea otter"};
  const std::vector<std::string> opts3 = {"solid", "liquid", "gas"};
  std::vector<ChoiceCase> corpus;

  // Rule 1: explicit markers.
  corpus.push_back({"The map shows the range.\nTherefore the answer is (B).", opts4, 1, "", 1});
  corpus.push_back({"Step by step reasoning here.\nAnswer: C", opts4, 2, "", 1});
  corpus.push_back({"Rationale first.\nAnswer: (d)", opts4, 3, "", 1});
  corpus.push_back({"The properties match a liquid.\nThe answer is B.", opts3, 1, "", 1});
  corpus.push_back({"Considering both clues, the answer is (A)", opts4, 0, "", 1});
  corpus.push_back({"First guess was (C), but correcting: Answer: (A).", opts4, 0, "", 1});
  corpus.push_back({"Answer: B\nSome trailing justification on a later line.", opts4, 1, "", 1});
  corpus.push_back({"It boils at 100 C at sea level, so the answer is (C).", opts3, 2, "", 1});
  corpus.push_back({"The answer is **D**.", opts4, 3, "", 1});
  corpus.push_back({"After weighing options, answer: b", opts3, 1, "", 1});

  // Rule 2: standalone letter on the final line.
  corpus.push_back({"Long rationale.\nThe best option is (B)", opts4, 1, "", 2});
  corpus.push_back({"Reasoning...\nOption C fits every clue, so C", opts4, 2, "", 2});
  corpus.push_back({"...\nI will go with D", opts4, 3, "", 2});
  corpus.push_back({"...\nChoose (a)", opts4, 0, "", 2});
  corpus.push_back({"...\nBoth A and B were close, but B matches the chart", opts4, 1, "", 2});
  corpus.push_back({"...\nFinal choice: C.", opts3, 2, "", 2});
  corpus.push_back({"...\nThe evidence favors option B overall, B", opts4, 1, "", 2});
  corpus.push_back({"...\nSelecting A", opts3, 0, "", 2});
  corpus.push_back({"...\nIt must be (D) given the legend", opts4, 3, "", 2});
  corpus.push_back({"...\nB seems right", opts4, 1, "", 2});

  // Rule 3: unique option-text substring.
  corpus.push_back({"...\nThe gray wolf is the best match.", opts4, 1, "", 3});
  corpus.push_back({"...\nThis is clearly the sea otter.", opts4, 3, "", 3});
  corpus.push_back({"...\nThe substance is a gas under these conditions.", opts3, 2, "", 3});
  corpus.push_back({"...\nEverything points to the brown bear.", opts4, 2, "", 3});
  corpus.push_back({"...\nIt behaves like a liquid.", opts3, 1, "", 3});
  corpus.push_back({"...\nthe RED FOX hunts at night.", opts4, 0, "", 3});
  corpus.push_back({"...\nThe creature shown is the sea otter, floating on its back.", opts4, 3, "", 3});
  corpus.push_back({"...\nAt room temperature it stays solid.", opts3, 0, "", 3});
  corpus.push_back({"...\nAmong the candidates only the gray wolf ranges this far north.", opts4, 1, "", 3});
  corpus.push_back({"...\nIts den suggests a brown bear family.", opts4, 2, "", 3});

  // Adversarial: typed errors only.
  corpus.push_back({"I cannot determine the answer from the given information.", opts4, std::nullopt, "no_answer_found", 0});
  corpus.push_back({"Rationale only, no conclusion stated.", opts3, std::nullopt, "no_answer_found", 0});
  corpus.push_back({"Answer: E", opts4, std::nullopt, "out_of_range", 0});
  corpus.push_back({"Rationale... Answer: D", opts3, std::nullopt, "out_of_range", 0});
  corpus.push_back({"The answer is (E).", opts4, std::nullopt, "out_of_range", 0});
  corpus.push_back({"...\nBoth the red fox and the gray wolf fit the clue.", opts4, std::nullopt, "ambiguous", 0});
  corpus.push_back({"...\nIt could be a solid or a liquid here.", opts3, std::nullopt, "ambiguous", 0});
  corpus.push_back({"Answer: 42", opts4, std::nullopt, "no_answer_found", 0});
  corpus.push_back({"...\nA dog appears somewhere, but the rest is unclear.", opts4, std::nullopt, "no_answer_found", 0});
  corpus.push_back({"The options all look wrong to me.", opts3, std::nullopt, "no_answer_found", 0});

  return corpus;
}

// Generated free-form corpus with embedded known values; 20 items.
struct FreeFormCase {
  std::string raw;
  bool number_gold;        // drives the extraction path
  double gold_number = 0;  // also the comparison target for percent logic
  double expected_number = 0;
  std::string expected_text;
};

inline std::vector<FreeFormCase> free_form_corpus() {
  std::vector<FreeFormCase> corpus;
  auto number = [&](std::string raw, double gold, double expected) {
    corpus.push_back({std::move(raw), true, gold, expected, ""});
  };
  auto text = [&](std::string raw, std::string expected) {
    corpus.push_back({std::move(raw), false, 0, 0, std::move(expected)});
  };

  number("Adding the segments gives the result.\nso the total is 1,234 meters.", 1234, 1234);
  number("Answer: 42", 42, 42);
  number("The slope works out to -3.5 here.\nAnswer: -3.5", -3.5, -3.5);
  number("Computation shown above.\nThe value of f(2) is 7.", 7, 7);
  number("Final tally below.\nCounted 12 squares and 9 triangles, difference 3", 3, 3);
  number("Rounding to two decimals.\nAnswer: 3.14", 3.14, 3.14);
  number("Percent case with fraction gold.\nAnswer: 45%", 0.45, 0.45);
  number("Percent case with whole-number gold.\nThe increase is 45%", 45, 45);
  number("Thousands grouping.\nTotal population: 12,345,678", 12345678, 12345678);
  number("Unit suffix.\nThe tank holds 250 liters", 250, 250);
  number("Money-ish.\nAnswer: $1,500", 1500, 1500);
  number("Two numbers, last one counts.\nBetween 5 and 9, the answer is 9", 9, 9);
  number("Zero edge.\nAnswer: 0", 0, 0);
  number("Decimal only.\nThe probability equals 0.125", 0.125, 0.125);

  text("Reasoning about colors.\nAnswer: red", "red");
  text("The label on the axis.\nAnswer: Temperature.", "temperature");
  text("Choosing a direction.\nAnswer: north", "north");
  text("Word answer with spaces.\nAnswer: red panda", "red panda");
  text("Mixed case.\nAnswer: Equinox", "equinox");
  text("Trailing punctuation.\nAnswer: carbon dioxide!", "carbon dioxide");

  return corpus;
}

}  // namespace cantor::test
