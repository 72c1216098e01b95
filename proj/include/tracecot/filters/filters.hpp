#pragma once

#include <cstddef>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "tracecot/lang/program.hpp"
#include "tracecot/lang/validate.hpp"
#include "tracecot/runtime/trace.hpp"
#include "tracecot/runtime/value.hpp"

namespace tracecot::filters {

struct FilterConfig {
  lang::LanguagePolicy policy;  // banned modules live here
  std::size_t max_input_bytes = 4096;
  runtime::ExecutionLimits limits;
  std::size_t max_trace_lines = 300;

  bool valid() const {
    return max_input_bytes > 0 && max_trace_lines > 0 && limits.valid();
  }
};

enum class Stage { Pre, During, Post };

std::string_view to_string(Stage stage);

struct FilterDecision {
  bool accepted = true;
  Stage stage = Stage::Pre;
  std::string rule_id;  // empty iff accepted
  std::string detail;

  static FilterDecision accept(Stage stage) { return {true, stage, "", ""}; }
  static FilterDecision reject(Stage stage, std::string rule_id, std::string detail) {
    return {false, stage, std::move(rule_id), std::move(detail)};
  }
};

// Static checks only; never runs user code. Besides banned modules and input
// size, any other validation failure (unsupported import, unknown builtin...)
// is reported with the validator's rule id.
FilterDecision pre_filter(const lang::SourceProgram& program, const runtime::Binding& input,
                          const FilterConfig& config);

// Size of the input as it appears in prompts and records.
std::size_t serialized_input_bytes(const runtime::Binding& input);

FilterDecision post_filter(const runtime::ExecutionTrace& trace, const FilterConfig& config);

nlohmann::ordered_json decision_json(const std::string& program_id, const FilterDecision& decision);

// One JSON object per line.
void append_decision(std::ostream& out, const std::string& program_id,
                     const FilterDecision& decision);

}  // namespace tracecot::filters
