#include "cantor/decision_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cantor/errors.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

namespace {

enum class Section { Preamble, Principle, Selection, Tasks };

struct Line {
  std::string_view text;
  size_t begin = 0;
  size_t end = 0;
};

std::vector<Line> index_lines(std::string_view raw) {
  std::vector<Line> lines;
  size_t pos = 0;
  while (pos <= raw.size()) {
    size_t nl = raw.find('\n', pos);
    size_t end = nl == std::string_view::npos ? raw.size() : nl;
    std::string_view text = raw.substr(pos, end - pos);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    lines.push_back({text, pos, end});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

// Drops leading list decorations: whitespace, markdown #/*/-/>, "1." / "1)"
// numbering, and "**" bold markers.
std::string_view strip_decorations(std::string_view s) {
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
      s.remove_prefix(1);
      changed = true;
    }
    while (!s.empty() && (s.front() == '#' || s.front() == '>')) {
      s.remove_prefix(1);
      changed = true;
    }
    if (s.size() >= 2 && s.substr(0, 2) == "**") {
      s.remove_prefix(2);
      changed = true;
    }
    if (!s.empty() && (s.front() == '-' || s.front() == '*') &&
        (s.size() == 1 || s[1] == ' ')) {
      s.remove_prefix(1);
      changed = true;
    }
    size_t d = 0;
    while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
    if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) {
      s.remove_prefix(d + 1);
      changed = true;
    }
  }
  return s;
}

std::string_view strip_trailing_bold(std::string_view s) {
  s = trim_view(s);
  while (s.size() >= 2 && s.substr(s.size() - 2) == "**") {
    s.remove_suffix(2);
    s = trim_view(s);
  }
  return s;
}

bool header_name_matches(Section section, std::string_view candidate) {
  std::string key = squash_alnum(candidate);
  switch (section) {
    case Section::Principle: {
      static const std::array<const char*, 5> names = {
          "principleanalysis", "principalanalysis", "analysis", "rationale",
          "principle"};
      return std::find(names.begin(), names.end(), key) != names.end();
    }
    case Section::Selection: {
      static const std::array<const char*, 7> names = {
          "moduleselectionreason", "moduleselectionandreason",
          "moduleselectionreasons", "moduleselection", "modulesselection",
          "moduleselections", "expertselection"};
      return std::find(names.begin(), names.end(), key) != names.end();
    }
    case Section::Tasks: {
      static const std::array<const char*, 9> names = {
          "taskallocation", "tasksallocation", "taskallocations",
          "taskassignment", "tasks", "task", "subtasks", "assignedtasks",
          "tasklist"};
      return std::find(names.begin(), names.end(), key) != names.end();
    }
    case Section::Preamble: break;
  }
  return false;
}

// A header line is "<synonym>" or "<synonym>: <inline body>", optionally
// decorated. Returns the matched section and any same-line body remainder.
struct HeaderMatch {
  Section section = Section::Preamble;
  std::string_view remainder;
};

std::optional<HeaderMatch> match_header(std::string_view line, bool strict) {
  if (strict) {
    std::string_view t = trim_view(line);
    if (t == "Principle Analysis:") return HeaderMatch{Section::Principle, {}};
    if (t == "Module Selection & Reason:") return HeaderMatch{Section::Selection, {}};
    if (t == "Task Allocation:") return HeaderMatch{Section::Tasks, {}};
    return std::nullopt;
  }
  std::string_view body = strip_decorations(line);
  if (body.empty() || body.front() == '[') return std::nullopt;
  size_t colon = body.find(':');
  std::string_view name =
      colon == std::string_view::npos ? trim_view(body) : trim_view(body.substr(0, colon));
  name = strip_trailing_bold(name);
  // Cap the name length so prose sentences containing a colon never match.
  if (name.empty() || name.size() > 40) return std::nullopt;
  for (Section s : {Section::Principle, Section::Selection, Section::Tasks}) {
    if (header_name_matches(s, name)) {
      std::string_view remainder =
          colon == std::string_view::npos ? std::string_view{} : trim_view(body.substr(colon + 1));
      return HeaderMatch{s, remainder};
    }
  }
  return std::nullopt;
}

// "[<name>: <instruction>]" candidates. The line may carry a harmless
// prefix like "1." or "Task 2:" before the bracket.
struct BracketTask {
  std::string name;
  std::string instruction;
};

std::optional<BracketTask> match_bracket_task(std::string_view line) {
  std::string_view t = trim_view(line);
  size_t open = t.find('[');
  if (open == std::string_view::npos || t.empty() || t.back() != ']') {
    return std::nullopt;
  }
  if (open > 0) {
    std::string prefix = squash_alnum(t.substr(0, open));
    bool decoration = prefix.empty();
    if (!decoration) {
      // Accept "task", "subtask", or bare numbering as prefixes.
      size_t i = 0;
      if (prefix.rfind("subtask", 0) == 0) i = 7;
      else if (prefix.rfind("task", 0) == 0) i = 4;
      decoration = std::all_of(prefix.begin() + i, prefix.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      });
    }
    if (!decoration) return std::nullopt;
  }
  std::string_view inner = t.substr(open + 1, t.size() - open - 2);
  size_t colon = inner.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  return BracketTask{trim(inner.substr(0, colon)),
                     trim(inner.substr(colon + 1))};
}

// "<Module>: <text>" where the name half normalizes to a canonical module.
std::optional<std::pair<ExpertModule, std::string>> match_module_colon_line(
    std::string_view line) {
  std::string_view t = strip_decorations(line);
  t = trim_view(t);
  if (t.empty() || t.front() == '[') return std::nullopt;
  size_t colon = t.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string_view name = strip_trailing_bold(trim_view(t.substr(0, colon)));
  if (name.size() > 40) return std::nullopt;
  auto module = normalize_module_name(name);
  if (!module) return std::nullopt;
  return std::make_pair(*module, trim(t.substr(colon + 1)));
}

struct TaskCandidate {
  std::string raw_name;
  std::optional<ExpertModule> module;
  std::string instruction;
  size_t begin = 0;
  size_t end = 0;
};

ParsedDecision parse_impl(const std::string& raw, const ParseOptions& options,
                          bool throw_on_no_tasks) {
  if (trim_view(raw).empty()) {
    throw ParseError("empty_input", "decision text is empty");
  }

  ParsedDecision out;
  out.decision.raw = raw;
  auto& diag = out.diagnostics;

  auto warn = [&](std::string code, std::string message, size_t begin,
                  size_t end, bool recovery) {
    diag.warnings.push_back({std::move(code), std::move(message), begin, end, recovery});
  };

  std::vector<Line> lines = index_lines(raw);

  // Pass 1: split into regions.
  Section current = Section::Preamble;
  bool saw_principle = false, saw_selection = false, saw_tasks = false;
  std::vector<std::string_view> preamble_lines, principle_lines;
  std::vector<Line> selection_lines, task_lines;

  for (const Line& line : lines) {
    if (auto header = match_header(line.text, options.strict)) {
      current = header->section;
      saw_principle |= current == Section::Principle;
      saw_selection |= current == Section::Selection;
      saw_tasks |= current == Section::Tasks;
      if (!header->remainder.empty()) {
        if (current == Section::Principle) {
          principle_lines.push_back(header->remainder);
        } else if (current == Section::Selection) {
          selection_lines.push_back({header->remainder, line.begin, line.end});
        } else {
          task_lines.push_back({header->remainder, line.begin, line.end});
        }
      }
      continue;
    }
    switch (current) {
      case Section::Preamble: preamble_lines.push_back(line.text); break;
      case Section::Principle: principle_lines.push_back(line.text); break;
      case Section::Selection: selection_lines.push_back(line); break;
      case Section::Tasks: task_lines.push_back(line); break;
    }
  }

  bool any_header = saw_principle || saw_selection || saw_tasks;

  // Principle analysis: its own region, or the preamble when the model
  // started analyzing without a header.
  {
    const auto& src = saw_principle ? principle_lines
                      : any_header  ? preamble_lines
                                    : std::vector<std::string_view>{};
    std::string text;
    for (size_t i = 0; i < src.size(); ++i) {
      if (i > 0) text += '\n';
      text += std::string(src[i]);
    }
    out.decision.principle_analysis = trim(text);
  }

  // Module selections.
  for (const Line& line : selection_lines) {
    if (auto bracket = match_bracket_task(line.text)) {
      if (auto module = normalize_module_name(bracket->name)) {
        out.decision.module_selections.push_back({*module, bracket->instruction});
        continue;
      }
    }
    if (auto entry = match_module_colon_line(line.text)) {
      out.decision.module_selections.push_back({entry->first, entry->second});
      continue;
    }
    // Continuation of the previous reason.
    std::string_view t = trim_view(line.text);
    if (!t.empty() && !out.decision.module_selections.empty()) {
      auto& reason = out.decision.module_selections.back().reason;
      if (!reason.empty()) reason += ' ';
      reason += std::string(t);
    }
  }

  // Task candidates: bracketed lines from the task region, or from the
  // whole text when no task header exists; colon-form lines only from an
  // explicit task region.
  std::vector<TaskCandidate> candidates;
  auto scan_bracket = [&](const Line& line) {
    auto bracket = match_bracket_task(line.text);
    if (!bracket) return false;
    TaskCandidate cand;
    cand.raw_name = bracket->name;
    cand.module = normalize_module_name(bracket->name);
    cand.instruction = bracket->instruction;
    cand.begin = line.begin;
    cand.end = line.end;
    candidates.push_back(std::move(cand));
    return true;
  };

  if (saw_tasks) {
    for (const Line& line : task_lines) {
      if (scan_bracket(line)) continue;
      if (options.strict) continue;
      if (auto entry = match_module_colon_line(line.text)) {
        TaskCandidate cand;
        cand.raw_name = std::string(display_name(entry->first));
        cand.module = entry->first;
        cand.instruction = entry->second;
        cand.begin = line.begin;
        cand.end = line.end;
        candidates.push_back(std::move(cand));
      }
    }
  } else if (!options.strict) {
    warn("missing_section_tasks", "no task-allocation header found", 0, 0, true);
    for (const Line& line : lines) scan_bracket(line);
  }

  // Policy filtering.
  bool visioniq_enabled =
      options.enabled.count(ExpertModule::VisionIQAnalyst) > 0;
  for (auto& cand : candidates) {
    if (cand.instruction.empty()) {
      warn("empty_instruction", "task line with empty instruction dropped",
           cand.begin, cand.end, true);
      continue;
    }
    if (!cand.module) {
      diag.unknown_modules.push_back(cand.raw_name);
      switch (options.policy) {
        case DisabledModulePolicy::Error:
          throw ParseError("unknown_module",
                           "unknown module '" + cand.raw_name + "'");
        case DisabledModulePolicy::Skip:
          warn("unknown_module_skipped",
               "task for unknown module '" + cand.raw_name + "' dropped",
               cand.begin, cand.end, true);
          continue;
        case DisabledModulePolicy::FallbackToVisionIQ:
          if (!visioniq_enabled) {
            warn("fallback_unavailable_dropped",
                 "task for unknown module '" + cand.raw_name +
                     "' dropped; VisionIQ Analyst is disabled",
                 cand.begin, cand.end, true);
            continue;
          }
          warn("unknown_module_fallback",
               "task for unknown module '" + cand.raw_name +
                   "' reassigned to VisionIQ Analyst",
               cand.begin, cand.end, true);
          cand.module = ExpertModule::VisionIQAnalyst;
          break;
      }
    } else if (!options.enabled.count(*cand.module)) {
      std::string name(display_name(*cand.module));
      switch (options.policy) {
        case DisabledModulePolicy::Error:
          throw ParseError("disabled_module",
                           "task references disabled module '" + name + "'");
        case DisabledModulePolicy::Skip:
          warn("disabled_module_skipped",
               "task for disabled module '" + name + "' dropped", cand.begin,
               cand.end, true);
          continue;
        case DisabledModulePolicy::FallbackToVisionIQ:
          if (!visioniq_enabled) {
            warn("fallback_unavailable_dropped",
                 "task for disabled module '" + name +
                     "' dropped; VisionIQ Analyst is disabled",
                 cand.begin, cand.end, true);
            continue;
          }
          warn("disabled_module_fallback",
               "task for disabled module '" + name +
                   "' reassigned to VisionIQ Analyst",
               cand.begin, cand.end, true);
          cand.module = ExpertModule::VisionIQAnalyst;
          break;
      }
    }
    SubTask task;
    task.module = *cand.module;
    task.instruction = cand.instruction;
    task.ordinal = static_cast<int>(out.decision.sub_tasks.size());
    out.decision.sub_tasks.push_back(std::move(task));
  }

  if (candidates.empty()) {
    if (throw_on_no_tasks) {
      throw ParseError("no_tasks_found", "no extractable sub-task line");
    }
    warn("no_tasks_found", "no extractable sub-task line; proceeding with empty S_t",
         0, raw.size(), true);
  }

  // Invariant repair: every sub-task module must appear in the selections.
  for (const SubTask& task : out.decision.sub_tasks) {
    bool present = std::any_of(out.decision.module_selections.begin(),
                               out.decision.module_selections.end(),
                               [&](const ModuleSelection& sel) {
                                 return sel.module == task.module;
                               });
    if (!present) {
      out.decision.module_selections.push_back({task.module, ""});
      warn("module_selection_synthesized",
           "selection entry synthesized for " +
               std::string(display_name(task.module)),
           0, 0, true);
    }
  }

  diag.recovered = std::any_of(diag.warnings.begin(), diag.warnings.end(),
                               [](const ParseWarning& w) { return w.recovery; });
  return out;
}

}  // namespace

ParsedDecision parse_decision(const std::string& raw,
                              const ParseOptions& options) {
  return parse_impl(raw, options, /*throw_on_no_tasks=*/true);
}

ParsedDecision parse_decision_lenient(const std::string& raw,
                                      const ParseOptions& options) {
  return parse_impl(raw, options, /*throw_on_no_tasks=*/false);
}

std::string serialize_decision(const Decision& decision) {
  auto flatten = [](std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '\n', ' ');
    return out;
  };

  std::string out = "Principle Analysis:\n";
  out += decision.principle_analysis;
  out += "\n\nModule Selection & Reason:\n";
  for (const auto& sel : decision.module_selections) {
    out += std::string(display_name(sel.module));
    out += sel.reason.empty() ? ":" : ": " + flatten(sel.reason);
    out += '\n';
  }
  out += "\nTask Allocation:\n";
  for (const auto& task : decision.sub_tasks) {
    out += "[" + std::string(display_name(task.module)) + ": " +
           flatten(task.instruction) + "]\n";
  }
  return out;
}

}  // namespace cantor
