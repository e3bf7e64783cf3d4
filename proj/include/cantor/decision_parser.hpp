#pragma once

#include <set>
#include <string>
#include <vector>

#include "cantor/domain.hpp"

namespace cantor {

struct ParseWarning {
  std::string code;     // e.g. unknown_module_skipped, disabled_module_fallback
  std::string message;
  size_t begin = 0;     // byte span within the raw input
  size_t end = 0;
  bool recovery = false;
};

struct ParseDiagnostics {
  std::vector<ParseWarning> warnings;
  std::vector<std::string> unknown_modules;  // raw names as emitted
  bool recovered = false;  // true iff any warning carries a recovery code
  int reprompt_retries = 0;  // set by the pipeline's retry wrapper
};

struct ParseOptions {
  std::set<ExpertModule> enabled = all_modules();
  DisabledModulePolicy policy = DisabledModulePolicy::Skip;
  // Strict mode accepts only the canonical section headers and the
  // bracketed task form; used by fixture tests.
  bool strict = false;
};

struct ParsedDecision {
  Decision decision;
  ParseDiagnostics diagnostics;
};

// Splits raw model output into the three decision regions by tolerant
// section-header matching, then extracts module selections and sub-tasks.
// Task lines match "[<Module>: <instruction>]" anywhere in the task region
// (or anywhere at all when no task header was found); the bare colon form
// "<Module>: <instruction>" is accepted only inside the task region and
// only for names that normalize to a canonical module, so prose like
// "Note: ..." is never mistaken for a task.
//
// Throws ParseError{empty_input} on blank input, {no_tasks_found} when no
// task line could be extracted at all, and {unknown_module} /
// {disabled_module} under policy=Error.
ParsedDecision parse_decision(const std::string& raw,
                              const ParseOptions& options = {});

// Same, but a task-less parse yields an empty-S_t Decision with a
// no_tasks_found warning instead of an error. Used by the pipeline after
// its one re-prompt retry is exhausted.
ParsedDecision parse_decision_lenient(const std::string& raw,
                                      const ParseOptions& options = {});

// Canonical emission: the three headers plus one line per selection and
// one bracketed line per sub-task. parse(serialize(d)) reproduces the
// structured fields for any Decision whose invariants hold. Embedded
// newlines in reasons/instructions are flattened to spaces.
std::string serialize_decision(const Decision& decision);

}  // namespace cantor
