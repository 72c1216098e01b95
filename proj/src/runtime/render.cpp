#include <string>

#include "tracecot/runtime/trace.hpp"

namespace tracecot::runtime {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string indent(int depth) { return std::string(static_cast<std::size_t>(4 * depth + 1), ' '); }

std::string line_number_field(int number, int depth) {
  std::string digits = std::to_string(number);
  std::size_t width = static_cast<std::size_t>(5 + 4 * depth);
  if (digits.size() >= width) return digits;
  return std::string(width - digits.size(), ' ') + digits;
}

// Source lines are shown without trailing whitespace so rendered lines never end in a blank.
std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

int event_depth(const TraceEvent& event) {
  return std::visit([](const auto& e) { return e.depth; }, event);
}

std::string render_trace(const ExecutionTrace& trace) {
  std::string out;
  for (const auto& event : trace.events) {
    std::visit(Overloaded{
                   [&](const CallEvent& e) {
                     out += e.depth == 0 ? std::string() : indent(e.depth);
                     out += ">>> Call to " + e.function_name + "\n";
                     for (const auto& [name, repr] : e.args) {
                       out += indent(e.depth) + "...... " + name + " = " + repr + "\n";
                     }
                   },
                   [&](const LineEvent& e) {
                     std::string text = rstrip(e.source_text);
                     out += line_number_field(e.line_number, e.depth) + " |";
                     if (!text.empty()) out += " " + text;
                     out += "\n";
                   },
                   [&](const VarUpdateEvent& e) {
                     out += indent(e.depth) + "...... " + e.name + " = " + e.value_repr + "\n";
                   },
                   [&](const ReturnEvent& e) {
                     out += indent(e.depth) + "<<< Return value from " + e.function_name + ": " +
                            e.value_repr + "\n";
                   },
               },
               event);
  }
  std::visit(Overloaded{
                 [](const Completed&) {},
                 [&](const RuntimeFailure& f) { out += "!!! RuntimeError: " + f.message + "\n"; },
                 [&](const BudgetExceeded& b) { out += "!!! BudgetExceeded: " + b.detail + "\n"; },
             },
             trace.outcome);
  return out;
}

std::size_t rendered_line_count(const ExecutionTrace& trace) {
  std::size_t count = trace.completed() ? 0 : 1;
  for (const auto& event : trace.events) {
    count += 1;
    if (const auto* call = std::get_if<CallEvent>(&event)) count += call->args.size();
  }
  return count;
}

}  // namespace tracecot::runtime
