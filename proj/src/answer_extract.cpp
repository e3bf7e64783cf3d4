#include "cantor/answer_extract.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "cantor/errors.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view final_line(std::string_view raw) {
  auto lines = split_lines(raw);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!trim_view(*it).empty()) return *it;
  }
  return {};
}

// Finds every occurrence of "answer is" / "answer:" (case-insensitive).
std::vector<size_t> marker_positions(std::string_view text) {
  std::string lower = to_lower(text);
  std::vector<size_t> out;
  for (std::string_view marker : {"answer is", "answer:"}) {
    size_t pos = 0;
    while ((pos = lower.find(marker, pos)) != std::string::npos) {
      out.push_back(pos + marker.size());
      ++pos;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Parses an option letter right after a marker: optional '(' and markdown
// '*', the letter (either case), then a closing boundary.
std::optional<char> letter_after(std::string_view text, size_t pos) {
  size_t i = pos;
  while (i < text.size() && (text[i] == ' ' || text[i] == '*' || text[i] == '(')) ++i;
  if (i >= text.size()) return std::nullopt;
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
  if (c < 'A' || c > 'E') return std::nullopt;
  size_t j = i + 1;
  while (j < text.size() && (text[j] == ')' || text[j] == '*')) ++j;
  if (j < text.size() && is_alnum(text[j])) return std::nullopt;
  return c;
}

// Rule 2 candidates on the final line: "(x)" either case, or a bare
// uppercase letter with word boundaries (excluding the article "A word").
std::vector<std::pair<size_t, char>> standalone_letters(std::string_view line) {
  std::vector<std::pair<size_t, char>> out;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '(' && i + 2 < line.size() && line[i + 2] == ')') {
      char inner = static_cast<char>(std::toupper(static_cast<unsigned char>(line[i + 1])));
      if (inner >= 'A' && inner <= 'E') out.emplace_back(i, inner);
      continue;
    }
    if (c >= 'A' && c <= 'E') {
      bool left_ok = i == 0 || !is_alnum(line[i - 1]);
      bool right_ok = i + 1 >= line.size() || !is_alnum(line[i + 1]);
      if (!left_ok || !right_ok) continue;
      if (c == 'A' && i + 2 < line.size() && line[i + 1] == ' ' &&
          std::islower(static_cast<unsigned char>(line[i + 2]))) {
        continue;  // article
      }
      out.emplace_back(i, c);
    }
  }
  return out;
}

// Numeric literals in a segment; handles signs, \d{1,3}(,\d{3})+ thousands
// groups, decimals, and a trailing '%'.
struct NumberLiteral {
  double value = 0.0;
  bool percent = false;
};

std::vector<NumberLiteral> scan_numbers(std::string_view s) {
  std::vector<NumberLiteral> out;
  size_t i = 0;
  auto digit = [&](size_t k) {
    return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]));
  };
  while (i < s.size()) {
    size_t start = i;
    bool negative = false;
    if ((s[i] == '-' || s[i] == '+') && digit(i + 1) &&
        (i == 0 || !is_alnum(s[i - 1]))) {
      negative = s[i] == '-';
      ++i;
    }
    if (!digit(i)) {
      i = start + 1;
      continue;
    }
    std::string digits;
    while (digit(i)) digits.push_back(s[i++]);
    // thousands groups
    while (i < s.size() && s[i] == ',' && digit(i + 1) && digit(i + 2) &&
           digit(i + 3) && !digit(i + 4)) {
      digits += std::string(s.substr(i + 1, 3));
      i += 4;
    }
    if (i < s.size() && s[i] == '.' && digit(i + 1)) {
      digits.push_back('.');
      ++i;
      while (digit(i)) digits.push_back(s[i++]);
    }
    NumberLiteral lit;
    lit.value = std::strtod(digits.c_str(), nullptr);
    if (negative) lit.value = -lit.value;
    lit.percent = i < s.size() && s[i] == '%';
    out.push_back(lit);
  }
  return out;
}

std::string fold_text_value(std::string_view s) {
  std::string t = trim(s);
  while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == ',')) {
    t.pop_back();
  }
  return to_lower(trim(t));
}

}  // namespace

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "correct";
    case Outcome::Incorrect: return "incorrect";
    case Outcome::Unscored: return "unscored";
  }
  return "";
}

int extract_choice(const std::string& raw,
                   const std::vector<std::string>& options, bool strict) {
  if (options.empty()) {
    throw ExtractError("no_answer_found", "no options to extract against");
  }
  int n = static_cast<int>(options.size());

  // Rule 1: last explicit marker that yields a letter.
  std::optional<char> marked;
  for (size_t pos : marker_positions(raw)) {
    if (auto letter = letter_after(raw, pos)) marked = letter;
  }
  if (marked) {
    int index = *marked - 'A';
    if (index >= n) {
      throw ExtractError("out_of_range",
                         std::string("marked option ") + *marked +
                             " exceeds the " + std::to_string(n) + " options");
    }
    return index;
  }
  if (strict) {
    throw ExtractError("no_answer_found", "no explicit answer marker");
  }

  std::string_view last = final_line(raw);

  // Rule 2: last in-range standalone letter on the final line.
  std::optional<int> standalone;
  for (const auto& [pos, letter] : standalone_letters(last)) {
    int index = letter - 'A';
    if (index < n) standalone = index;
  }
  if (standalone) return *standalone;

  // Rule 3: unique option-text substring, final line first, then all text.
  for (std::string_view scope : {last, std::string_view(raw)}) {
    std::string folded = to_lower(scope);
    std::vector<int> matches;
    for (int i = 0; i < n; ++i) {
      std::string needle = to_lower(trim_view(options[i]));
      if (!needle.empty() && folded.find(needle) != std::string::npos) {
        matches.push_back(i);
      }
    }
    if (matches.size() == 1) return matches[0];
    if (matches.size() > 1) {
      throw ExtractError("ambiguous", std::to_string(matches.size()) +
                                          " option texts match the answer");
    }
  }

  throw ExtractError("no_answer_found", "no extraction rule matched");
}

FreeFormValue extract_free_form(const std::string& raw, const GoldAnswer& gold) {
  std::string_view line = final_line(raw);
  if (line.empty()) {
    throw ExtractError("no_answer_found", "empty response");
  }

  // Prefer the text after the last answer marker on the final line.
  std::string_view segment = line;
  auto markers = marker_positions(line);
  if (!markers.empty()) segment = line.substr(markers.back());

  if (gold.kind == GoldAnswer::Kind::Number) {
    auto literals = scan_numbers(segment);
    if (literals.empty() && segment.size() != line.size()) {
      literals = scan_numbers(line);
    }
    if (literals.empty()) {
      throw ExtractError("no_answer_found", "no numeric literal on the final line");
    }
    NumberLiteral lit = literals.back();
    double value = lit.value;
    if (lit.percent && std::abs(gold.number) <= 1.0) value /= 100.0;
    FreeFormValue out;
    out.kind = FreeFormValue::Kind::Number;
    out.number = value;
    return out;
  }

  if (markers.empty()) {
    throw ExtractError("no_answer_found", "no answer marker on the final line");
  }
  std::string value = fold_text_value(segment);
  if (value.empty()) {
    throw ExtractError("no_answer_found", "empty answer value");
  }
  FreeFormValue out;
  out.kind = FreeFormValue::Kind::Text;
  out.text = value;
  return out;
}

Outcome compare_answer(const FinalAnswer& pred, const GoldAnswer& gold) {
  if (!pred.scorable()) return Outcome::Unscored;
  switch (gold.kind) {
    case GoldAnswer::Kind::Choice:
      if (!pred.choice_index) return Outcome::Incorrect;
      return *pred.choice_index == gold.choice_index ? Outcome::Correct
                                                     : Outcome::Incorrect;
    case GoldAnswer::Kind::Number: {
      if (!pred.free_form || pred.free_form->kind != FreeFormValue::Kind::Number) {
        return Outcome::Incorrect;
      }
      double tol = gold.tolerance.value_or(1e-6 * std::max(1.0, std::abs(gold.number)));
      return std::abs(pred.free_form->number - gold.number) <= tol
                 ? Outcome::Correct
                 : Outcome::Incorrect;
    }
    case GoldAnswer::Kind::Text: {
      if (!pred.free_form || pred.free_form->kind != FreeFormValue::Kind::Text) {
        return Outcome::Incorrect;
      }
      return fold_text_value(pred.free_form->text) == fold_text_value(gold.text)
                 ? Outcome::Correct
                 : Outcome::Incorrect;
    }
  }
  return Outcome::Incorrect;
}

FinalAnswer extract_final_answer(const std::string& raw,
                                 const QueryRecord& record, bool strict) {
  FinalAnswer answer;
  answer.raw = raw;

  // Rationale: everything before the last answer marker.
  std::string lower = to_lower(raw);
  size_t marker = lower.rfind("answer");
  answer.rationale = marker != std::string::npos && marker > 0
                         ? trim(std::string_view(raw).substr(0, marker))
                         : trim(raw);

  try {
    if (record.is_choice()) {
      answer.choice_index = extract_choice(raw, record.options, strict);
    } else {
      answer.free_form = extract_free_form(raw, record.gold);
    }
  } catch (const ExtractError& err) {
    answer.error_code = err.code();
  }
  return answer;
}

}  // namespace cantor
