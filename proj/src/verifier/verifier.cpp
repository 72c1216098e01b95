#include "tracecot/verifier/verifier.hpp"

#include <cctype>
#include <set>
#include <variant>

#include "tracecot/common/error.hpp"

namespace tracecot::verifier {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return is_alnum(c) || c == '_'; }

// Closing quote position for an opening quote at `open`, or npos.
std::size_t closing_quote(std::string_view text, std::size_t open) {
  char q = text[open];
  for (std::size_t i = open + 1; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') return std::string_view::npos;
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == q && (i + 1 >= text.size() || !is_alnum(text[i + 1]))) return i;
  }
  return std::string_view::npos;
}

// Length of a numeric token starting at i, or 0.
std::size_t number_length(std::string_view text, std::size_t i) {
  std::size_t j = i;
  if (j < text.size() && text[j] == '-') ++j;
  std::size_t digits = j;
  while (j < text.size() && is_digit(text[j])) ++j;
  if (j == digits) return 0;
  if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
    ++j;
    while (j < text.size() && is_digit(text[j])) ++j;
  }
  if (j + 1 < text.size() && (text[j] == 'e' || text[j] == 'E')) {
    std::size_t k = j + 1;
    if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
    if (k < text.size() && is_digit(text[k])) {
      while (k < text.size() && is_digit(text[k])) ++k;
      j = k;
    }
  }
  return j - i;
}

bool number_starts_here(std::string_view text, std::size_t i) {
  char prev = i == 0 ? ' ' : text[i - 1];
  if (is_word(prev) || prev == '.') return false;
  if (text[i] == '-') return i + 1 < text.size() && is_digit(text[i + 1]);
  return is_digit(text[i]);
}

void collect_numbers(std::string_view text, std::set<std::string>& out) {
  for (std::size_t i = 0; i < text.size();) {
    if (number_starts_here(text, i)) {
      std::size_t n = number_length(text, i);
      if (n > 0) {
        out.emplace(text.substr(i, n));
        // A negative number also grounds its magnitude ("-3" lets prose say 3).
        if (text[i] == '-') out.emplace(text.substr(i + 1, n - 1));
        i += n;
        continue;
      }
    }
    ++i;
  }
}

}  // namespace

std::size_t step_marker_length(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (text.substr(i, 2) == "**") i += 2;
  if (text.substr(i, 4) == "Step" || text.substr(i, 4) == "step") {
    i += 4;
    while (i < text.size() && text[i] == ' ') ++i;
  }
  std::size_t digits = i;
  while (i < text.size() && is_digit(text[i])) ++i;
  if (i == digits) return 0;
  if (text.substr(i, 2) == "**") i += 2;
  if (i < text.size() && (text[i] == '.' || text[i] == ':' || text[i] == ')')) {
    ++i;
    if (text.substr(i, 2) == "**") i += 2;
    // "3.5" is a number, not a marker.
    if (i == text.size() || std::isspace(static_cast<unsigned char>(text[i]))) return i;
  }
  return 0;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c == '"' ? '\'' : c);
  }
  return out;
}

bool check_output_correctness(const naturalizer::NlTrace& nl, std::string_view ground_truth_repr) {
  std::string answer = normalize_answer(nl.final_answer_text);
  std::string truth = normalize_answer(ground_truth_repr);
  if (answer.empty() || truth.empty()) return false;
  for (std::size_t pos = answer.find(truth); pos != std::string::npos;
       pos = answer.find(truth, pos + 1)) {
    bool left_ok = pos == 0 || !is_word(truth.front()) || !is_word(answer[pos - 1]);
    std::size_t end = pos + truth.size();
    bool right_ok = end == answer.size() || !is_word(truth.back()) || !is_word(answer[end]);
    // "3" inside "3.5" is not the answer 3.
    if (right_ok && is_digit(truth.back()) && end + 1 < answer.size() && answer[end] == '.' &&
        is_digit(answer[end + 1])) {
      right_ok = false;
    }
    if (left_ok && right_ok) return true;
  }
  return false;
}

std::vector<Literal> extract_literals(std::string_view text) {
  std::vector<Literal> literals;
  std::size_t i = step_marker_length(text);
  while (i < text.size()) {
    char c = text[i];
    if ((c == '\'' || c == '"') && (i == 0 || !is_alnum(text[i - 1]))) {
      std::size_t close = closing_quote(text, i);
      if (close != std::string_view::npos) {
        literals.push_back({Literal::Kind::Quoted, std::string(text.substr(i + 1, close - i - 1))});
        i = close + 1;
        continue;
      }
    }
    if (number_starts_here(text, i)) {
      std::size_t n = number_length(text, i);
      if (n > 0) {
        literals.push_back({Literal::Kind::Numeric, std::string(text.substr(i, n))});
        i += n;
        continue;
      }
    }
    ++i;
  }
  return literals;
}

nlohmann::ordered_json to_json(const GroundednessReport& report) {
  nlohmann::ordered_json violations = nlohmann::ordered_json::array();
  for (const auto& [step, literal] : report.violations) {
    violations.push_back({{"step", step}, {"literal", literal}});
  }
  return {{"total_literals", report.total_literals},
          {"grounded_literals", report.grounded_literals},
          {"violations", violations}};
}

GroundednessReport check_groundedness(const naturalizer::NlTrace& nl,
                                      const runtime::ExecutionTrace& trace,
                                      std::string_view input_repr, std::string_view question) {
  std::vector<std::string> sources;
  for (const auto& event : trace.events) {
    if (const auto* call = std::get_if<runtime::CallEvent>(&event)) {
      for (const auto& arg : call->args) sources.push_back(arg.second);
    } else if (const auto* update = std::get_if<runtime::VarUpdateEvent>(&event)) {
      sources.push_back(update->value_repr);
    } else if (const auto* ret = std::get_if<runtime::ReturnEvent>(&event)) {
      sources.push_back(ret->value_repr);
    }
  }
  if (trace.completed()) sources.push_back(trace.return_repr());
  sources.emplace_back(input_repr);
  sources.emplace_back(question);

  std::set<std::string> numbers;
  for (const auto& s : sources) collect_numbers(s, numbers);

  auto quoted_grounded = [&](const std::string& literal) {
    for (const auto& s : sources) {
      if (s.find(literal) != std::string::npos) return true;
    }
    return false;
  };

  GroundednessReport report;
  auto check = [&](std::size_t index, std::string_view text) {
    for (const auto& literal : extract_literals(text)) {
      ++report.total_literals;
      bool ok = literal.kind == Literal::Kind::Quoted ? quoted_grounded(literal.text)
                                                      : numbers.count(literal.text) != 0;
      if (ok) {
        ++report.grounded_literals;
      } else {
        report.violations.emplace_back(index, literal.text);
      }
    }
  };
  for (std::size_t i = 0; i < nl.steps.size(); ++i) check(i, nl.steps[i]);
  if (nl.steps.empty() || nl.steps.back() != nl.final_answer_text) {
    check(nl.steps.size(), nl.final_answer_text);
  }
  return report;
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

nlohmann::ordered_json to_json(const TokenStats& stats) {
  return {{"average_tokens", stats.average_tokens},
          {"max_reached_count", stats.max_reached_count},
          {"sample_count", stats.sample_count}};
}

TokenStats token_stats(const std::vector<std::pair<std::string, std::string>>& completions,
                       std::size_t max_tokens, const Tokenizer& tokenizer) {
  if (completions.empty()) throw Error("empty_sample", "no completions to measure");
  if (max_tokens == 0) throw Error("invalid_max_tokens", "max_tokens must be positive");
  TokenStats stats;
  stats.sample_count = completions.size();
  // Summed as integers so the mean does not depend on input order.
  std::size_t total = 0;
  for (const auto& [text, finish_reason] : completions) {
    total += tokenizer(text);
    if (finish_reason == "length") ++stats.max_reached_count;
  }
  stats.average_tokens = static_cast<double>(total) / static_cast<double>(completions.size());
  return stats;
}

}  // namespace tracecot::verifier
