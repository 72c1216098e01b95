#pragma once

#include <string>
#include <string_view>

#include "tracecot/naturalizer/nl_trace.hpp"
#include "tracecot/runtime/trace.hpp"

namespace tracecot::naturalizer {

// Deterministic rationale built from the trace alone. Step one restates the
// input (the entry call arguments); then one step per nested call, per run of
// variable updates and per return; the last step states the final answer.
// Runs of line events without value changes produce no step of their own.
// Throws Error("incomplete_trace") unless the outcome is Completed.
NlTrace naturalize_rule_based(std::string_view question, const runtime::ExecutionTrace& trace);

struct TranslationPrompt {
  std::string system_text;
  std::string user_text;
};

// The translation template with {question}, {input} and {trace} filled in a
// single pass, so slot-like text inside the values is left alone.
// Throws Error("empty_question") for a blank question.
TranslationPrompt build_translation_prompt(std::string_view question, std::string_view input_repr,
                                           std::string_view trace_text);

struct ThinkingDelimiters {
  std::string open = "<think>";
  std::string close = "</think>";
};

// Drops a leading thinking block. A close delimiter without an opener (some
// endpoints strip the opener) removes everything up to it.
std::string strip_thinking(std::string_view completion, const ThinkingDelimiters& delimiters = {});

// Numbered items ("1.", "Step 2:", "**3.**") start new steps; text without any
// numbering is split on blank lines. Numbering is removed from the steps.
std::vector<std::string> split_steps(std::string_view body);

// Parses a translator completion. The final answer is the last step. The
// result must be grounded in `trace` and agree with its return value.
// Errors: "empty_after_strip", "ungrounded_translation", "incorrect_final_answer".
NlTrace ingest_llm_translation(std::string_view raw_completion, const runtime::ExecutionTrace& trace,
                               std::string_view input_repr = {}, std::string_view question = {},
                               const ThinkingDelimiters& delimiters = {});

// Like ingest_llm_translation without grounding checks; used for the
// CodeI/O-style baseline whose completions never saw a trace.
NlTrace parse_completion(std::string_view raw_completion, const ThinkingDelimiters& delimiters = {});

// Numbered steps, a blank line between each, then the answer line.
std::string completion_text(const NlTrace& nl);

}  // namespace tracecot::naturalizer
