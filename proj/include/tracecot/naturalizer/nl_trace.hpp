#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/common/error.hpp"

namespace tracecot::naturalizer {

enum class Mode { RuleBased, LlmTranslated };

inline std::string_view to_string(Mode mode) {
  return mode == Mode::RuleBased ? "rule_based" : "llm_translated";
}

inline Mode mode_from_string(std::string_view text) {
  if (text == "rule_based") return Mode::RuleBased;
  if (text == "llm_translated") return Mode::LlmTranslated;
  throw Error("invalid_mode", "unknown rationale mode '" + std::string(text) + "'");
}

// A step-by-step rationale. Steps are stored without their numbering.
struct NlTrace {
  std::vector<std::string> steps;
  std::string final_answer_text;
  Mode mode = Mode::RuleBased;
};

inline nlohmann::ordered_json to_json(const NlTrace& nl) {
  return {{"steps", nl.steps}, {"final_answer", nl.final_answer_text}, {"mode", to_string(nl.mode)}};
}

inline NlTrace nl_trace_from_json(const nlohmann::ordered_json& json) {
  NlTrace nl;
  nl.steps = json.at("steps").get<std::vector<std::string>>();
  nl.final_answer_text = json.at("final_answer").get<std::string>();
  nl.mode = mode_from_string(json.at("mode").get<std::string>());
  return nl;
}

}  // namespace tracecot::naturalizer
