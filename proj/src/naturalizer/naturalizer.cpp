#include "tracecot/naturalizer/naturalizer.hpp"

#include <cctype>
#include <variant>

#include "tracecot/common/error.hpp"
#include "tracecot/common/template.hpp"
#include "tracecot/verifier/verifier.hpp"

namespace tracecot::naturalizer {

namespace {

constexpr std::string_view kTranslationTemplate =
    "Given a question, an input to the question, and an execution trace that solves the question, "
    "your job is to translate the execution trace into a step-by-step thinking process. Here are "
    "some rules for translation:\n"
    "\n"
    "- Use the exact values from the execution trace during the thought process to ensure the "
    "correctness of the thought process.\n"
    "\n"
    "- Do not write code in your thinking process.\n"
    "\n"
    "- Pretend you are not given the execution trace and you are solving the question by tracing "
    "the code by yourself. So, you should not mention that you are following the execution trace "
    "even when you are thinking.\n"
    "\n"
    "**Question**\n"
    "\n"
    "{question}\n"
    "\n"
    "**Input**\n"
    "\n"
    "{input}\n"
    "\n"
    "**Execution Trace**\n"
    "\n"
    "```\n"
    "{trace}"
    "```\n";

std::string code_span(std::string_view text) { return "`" + std::string(text) + "`"; }

std::string join_clauses(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += i + 1 == parts.size() ? " and " : ", ";
    out += parts[i];
  }
  return out;
}

std::string argument_list(const runtime::CallEvent& call) {
  std::vector<std::string> parts;
  for (const auto& [name, repr] : call.args) parts.push_back(code_span(name) + " set to " + code_span(repr));
  return join_clauses(parts);
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

}  // namespace

NlTrace naturalize_rule_based(std::string_view question, const runtime::ExecutionTrace& trace) {
  (void)question;  // the rationale restates values, not the question
  if (!trace.completed()) {
    throw Error("incomplete_trace", "only completed runs can be explained");
  }
  NlTrace nl;
  nl.mode = Mode::RuleBased;
  std::vector<std::string> stack;

  const auto& events = trace.events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& event = events[i];
    if (const auto* call = std::get_if<runtime::CallEvent>(&event)) {
      std::string name = code_span(call->function_name);
      if (stack.empty()) {
        nl.steps.push_back(call->args.empty()
                               ? "We start by evaluating " + name + ", which takes no input."
                               : "We start from the input, with " + argument_list(*call) +
                                     ", and evaluate " + name + " on it.");
      } else {
        nl.steps.push_back(call->args.empty()
                               ? "Next we need the result of " + name + " with no arguments."
                               : "Next we need the result of " + name + " with " +
                                     argument_list(*call) + ".");
      }
      stack.push_back(call->function_name);
    } else if (std::holds_alternative<runtime::VarUpdateEvent>(event)) {
      std::vector<std::string> parts;
      for (; i < events.size(); ++i) {
        const auto* update = std::get_if<runtime::VarUpdateEvent>(&events[i]);
        if (update == nullptr) break;
        parts.push_back(code_span(update->name) + " is now " + code_span(update->value_repr));
      }
      --i;
      std::string where = stack.empty() ? std::string() : "Inside " + code_span(stack.back()) + ", ";
      std::string text = join_clauses(parts) + ".";
      if (where.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      nl.steps.push_back(where + text);
    } else if (const auto* ret = std::get_if<runtime::ReturnEvent>(&event)) {
      if (!stack.empty()) stack.pop_back();
      nl.steps.push_back(stack.empty()
                             ? "Finally, " + code_span(ret->function_name) + " returns " +
                                   code_span(ret->value_repr) + "."
                             : "That call to " + code_span(ret->function_name) + " gives back " +
                                   code_span(ret->value_repr) + ", and we continue in " +
                                   code_span(stack.back()) + ".");
    }
  }
  nl.final_answer_text = "The final output is " + code_span(trace.return_repr()) + ".";
  nl.steps.push_back(nl.final_answer_text);
  return nl;
}

TranslationPrompt build_translation_prompt(std::string_view question, std::string_view input_repr,
                                           std::string_view trace_text) {
  if (trim(question).empty()) throw Error("empty_question", "translation needs a question");
  std::string trace(trace_text);
  if (!trace.empty() && trace.back() != '\n') trace.push_back('\n');
  TranslationPrompt prompt;
  prompt.user_text = fill_slots(kTranslationTemplate, {{"question", std::string(question)},
                                                       {"input", std::string(input_repr)},
                                                       {"trace", trace}});
  return prompt;
}

std::string strip_thinking(std::string_view completion, const ThinkingDelimiters& delimiters) {
  std::string text = trim(completion);
  if (!delimiters.open.empty() && text.rfind(delimiters.open, 0) == 0) {
    std::size_t close = text.find(delimiters.close, delimiters.open.size());
    // An unterminated thinking block leaves nothing usable.
    if (close == std::string::npos) return "";
    return trim(std::string_view(text).substr(close + delimiters.close.size()));
  }
  std::size_t close = text.find(delimiters.close);
  if (!delimiters.close.empty() && close != std::string::npos &&
      text.find(delimiters.open) == std::string::npos) {
    return trim(std::string_view(text).substr(close + delimiters.close.size()));
  }
  return text;
}

std::vector<std::string> split_steps(std::string_view body) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= body.size();) {
    std::size_t nl = body.find('\n', start);
    if (nl == std::string_view::npos) nl = body.size();
    lines.push_back(body.substr(start, nl - start));
    start = nl + 1;
  }
  auto numbered = [](std::string_view line) {
    return !line.empty() && !std::isspace(static_cast<unsigned char>(line[0])) &&
           verifier::step_marker_length(line) > 0;
  };
  bool any_numbered = false;
  for (auto line : lines) any_numbered = any_numbered || numbered(line);

  std::vector<std::string> steps;
  std::string current;
  auto flush = [&] {
    std::string step = trim(current);
    if (!step.empty()) steps.push_back(std::move(step));
    current.clear();
  };
  for (auto line : lines) {
    if (any_numbered ? numbered(line) : trim(line).empty()) {
      flush();
      if (any_numbered) line.remove_prefix(verifier::step_marker_length(line));
    }
    current += std::string(line) + "\n";
  }
  flush();
  return steps;
}

NlTrace parse_completion(std::string_view raw_completion, const ThinkingDelimiters& delimiters) {
  std::string body = strip_thinking(raw_completion, delimiters);
  NlTrace nl;
  nl.mode = Mode::LlmTranslated;
  nl.steps = split_steps(body);
  if (nl.steps.empty()) throw Error("empty_after_strip", "completion has no content after thinking");
  nl.final_answer_text = nl.steps.back();
  return nl;
}

NlTrace ingest_llm_translation(std::string_view raw_completion, const runtime::ExecutionTrace& trace,
                               std::string_view input_repr, std::string_view question,
                               const ThinkingDelimiters& delimiters) {
  NlTrace nl = parse_completion(raw_completion, delimiters);
  verifier::GroundednessReport report = verifier::check_groundedness(nl, trace, input_repr, question);
  if (!report.grounded()) {
    std::string detail;
    for (const auto& [step, literal] : report.violations) {
      if (!detail.empty()) detail += ", ";
      detail += "step " + std::to_string(step + 1) + ": " + literal;
    }
    throw Error("ungrounded_translation", detail);
  }
  if (trace.completed() && !verifier::check_output_correctness(nl, trace.return_repr())) {
    throw Error("incorrect_final_answer", "final step does not state " + trace.return_repr());
  }
  return nl;
}

std::string completion_text(const NlTrace& nl) {
  std::string out;
  for (std::size_t i = 0; i < nl.steps.size(); ++i) {
    out += std::to_string(i + 1) + ". " + nl.steps[i] + "\n\n";
  }
  out += "**Answer**:\n" + nl.final_answer_text;
  return out;
}

}  // namespace tracecot::naturalizer
