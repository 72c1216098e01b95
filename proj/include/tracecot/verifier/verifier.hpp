#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/naturalizer/nl_trace.hpp"
#include "tracecot/runtime/trace.hpp"

namespace tracecot::verifier {

// Whitespace runs collapse to one space, double quotes become single quotes.
std::string normalize_answer(std::string_view text);

// True iff the normalized final answer contains the normalized ground truth as
// a whole token (so "110" does not count as containing "11").
bool check_output_correctness(const naturalizer::NlTrace& nl, std::string_view ground_truth_repr);

// Length of a leading step marker ("1.", "2)", "Step 3:", "**4.**"), or 0.
std::size_t step_marker_length(std::string_view text);

struct Literal {
  enum class Kind { Quoted, Numeric };
  Kind kind;
  std::string text;  // quoted literals without their quotes
};

// Quoted text ('...' or "...") and numeric tokens mentioned in a piece of prose.
// Leading step markers such as "1." or "Step 2:" are not literals.
std::vector<Literal> extract_literals(std::string_view text);

struct GroundednessReport {
  std::size_t total_literals = 0;
  std::size_t grounded_literals = 0;
  std::vector<std::pair<std::size_t, std::string>> violations;  // (step index, literal)

  bool grounded() const { return violations.empty(); }
};

nlohmann::ordered_json to_json(const GroundednessReport& report);

// A literal is grounded when it occurs in some value repr of the trace (call
// arguments, variable updates, returns), in the input, or in the question.
// Quoted literals match as substrings; numbers match whole numeric tokens.
// The final answer text is checked as one more step after the last one,
// unless it simply repeats the last step.
GroundednessReport check_groundedness(const naturalizer::NlTrace& nl,
                                      const runtime::ExecutionTrace& trace,
                                      std::string_view input_repr = {},
                                      std::string_view question = {});

using Tokenizer = std::function<std::size_t(std::string_view)>;

std::size_t whitespace_token_count(std::string_view text);

struct TokenStats {
  double average_tokens = 0.0;
  std::size_t max_reached_count = 0;
  std::size_t sample_count = 0;
};

nlohmann::ordered_json to_json(const TokenStats& stats);

// `max_tokens` is recorded for context; truncation is read from the finish reason.
TokenStats token_stats(const std::vector<std::pair<std::string, std::string>>& completions,
                       std::size_t max_tokens, const Tokenizer& tokenizer = whitespace_token_count);

}  // namespace tracecot::verifier
