#pragma once

#include <string>
#include <vector>

#include "cantor/domain.hpp"

namespace cantor {

// Extracts the chosen option index from rationale-then-answer text.
// Rules apply in fixed precedence:
//   1. explicit marker: "Answer: (X)" / "Answer: X" / "The answer is X",
//      last such marker wins; an out-of-range letter is an error, not a
//      fall-through;
//   2. last standalone in-range option letter on the final line (a bare
//      uppercase "A" followed by a lowercase word is treated as the
//      article and ignored);
//   3. unique case-insensitive option-text substring match, on the final
//      line first, then the whole text.
// strict accepts rule 1 only. Never returns an index >= options.size().
// Throws ExtractError{no_answer_found | ambiguous | out_of_range}.
int extract_choice(const std::string& raw,
                   const std::vector<std::string>& options,
                   bool strict = false);

// Free-form extraction, driven by the gold kind. Numbers: last parseable
// numeric literal on the final answer line, thousands separators stripped,
// "%" divided out only when the gold is a fraction <= 1. Text: final-line
// text after an "Answer:" marker, trimmed and case-folded.
// Throws ExtractError{no_answer_found}.
FreeFormValue extract_free_form(const std::string& raw, const GoldAnswer& gold);

enum class Outcome { Correct, Incorrect, Unscored };

std::string_view to_string(Outcome o);

// Choice vs choice: index equality. Number vs number: |pred - gold| <= tol
// with default tol = 1e-6 * max(1, |gold|). Text vs text: case-insensitive
// trimmed equality. Unscorable predictions are Unscored (counted as
// incorrect in accuracy, tallied separately).
Outcome compare_answer(const FinalAnswer& pred, const GoldAnswer& gold);

// Total wrapper: extraction errors become an unscorable FinalAnswer whose
// error_code carries the typed failure.
FinalAnswer extract_final_answer(const std::string& raw,
                                 const QueryRecord& record,
                                 bool strict = false);

}  // namespace cantor
