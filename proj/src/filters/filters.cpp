#include "tracecot/filters/filters.hpp"

#include <variant>

namespace tracecot::filters {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Pre: return "pre";
    case Stage::During: return "during";
    case Stage::Post: return "post";
  }
  return "pre";
}

std::size_t serialized_input_bytes(const runtime::Binding& input) {
  return runtime::repr_binding(input).size();
}

FilterDecision pre_filter(const lang::SourceProgram& program, const runtime::Binding& input,
                          const FilterConfig& config) {
  lang::ValidationReport report = lang::validate(program, config.policy);
  // Banned modules take precedence so the reported reason is the most specific one.
  for (const auto& v : report.violations) {
    if (v.rule_id == "banned_module") {
      return FilterDecision::reject(Stage::Pre, v.rule_id,
                                    "line " + std::to_string(v.line_number) + ": " + v.message);
    }
  }
  if (!report.accepted()) {
    const auto& v = report.violations.front();
    return FilterDecision::reject(Stage::Pre, v.rule_id,
                                  "line " + std::to_string(v.line_number) + ": " + v.message);
  }
  std::size_t bytes = serialized_input_bytes(input);
  if (bytes > config.max_input_bytes) {
    return FilterDecision::reject(Stage::Pre, "input_too_large",
                                  std::to_string(bytes) + " bytes exceeds limit of " +
                                      std::to_string(config.max_input_bytes));
  }
  return FilterDecision::accept(Stage::Pre);
}

FilterDecision post_filter(const runtime::ExecutionTrace& trace, const FilterConfig& config) {
  if (const auto* failure = std::get_if<runtime::RuntimeFailure>(&trace.outcome)) {
    return FilterDecision::reject(Stage::During, "execution_failed", failure->message);
  }
  if (const auto* budget = std::get_if<runtime::BudgetExceeded>(&trace.outcome)) {
    return FilterDecision::reject(Stage::During, "execution_failed", budget->detail);
  }
  std::size_t lines = runtime::rendered_line_count(trace);
  if (lines > config.max_trace_lines) {
    return FilterDecision::reject(Stage::Post, "trace_too_long",
                                  std::to_string(lines) + " lines exceeds limit of " +
                                      std::to_string(config.max_trace_lines));
  }
  return FilterDecision::accept(Stage::Post);
}

nlohmann::ordered_json decision_json(const std::string& program_id, const FilterDecision& decision) {
  return {{"program_id", program_id},
          {"stage", to_string(decision.stage)},
          {"rule_id", decision.rule_id},
          {"accepted", decision.accepted},
          {"detail", decision.detail}};
}

void append_decision(std::ostream& out, const std::string& program_id,
                     const FilterDecision& decision) {
  out << decision_json(program_id, decision).dump() << '\n';
}

}  // namespace tracecot::filters
