#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tracecot::runtime {

// Deterministic stand-in for a wall-clock timeout: a run is cut off after
// `max_steps` executed lines. `wall_clock_limit` is an extra guard for hostile
// inputs and is off (zero) by default because it makes outcomes timing-dependent.
struct ExecutionLimits {
  std::size_t max_steps = 100'000;
  std::size_t max_call_depth = 500;
  std::size_t max_collection_size = 100'000;
  std::chrono::milliseconds wall_clock_limit{0};

  bool valid() const { return max_steps > 0 && max_call_depth > 0 && max_collection_size > 0; }
};

struct CallEvent {
  std::string function_name;
  std::vector<std::pair<std::string, std::string>> args;  // (name, repr)
  int depth;
};

// `line_number` is the displayed number (line offset already applied).
struct LineEvent {
  int line_number;
  std::string source_text;
  int depth;
};

struct VarUpdateEvent {
  std::string name;
  std::string value_repr;
  int depth;
};

struct ReturnEvent {
  std::string function_name;
  std::string value_repr;
  int depth;
};

using TraceEvent = std::variant<CallEvent, LineEvent, VarUpdateEvent, ReturnEvent>;

struct Completed {
  std::string value_repr;
};

struct RuntimeFailure {
  std::string message;
};

struct BudgetExceeded {
  std::string detail;
};

using Outcome = std::variant<Completed, RuntimeFailure, BudgetExceeded>;

struct ExecutionTrace {
  std::vector<TraceEvent> events;
  std::size_t step_count = 0;
  Outcome outcome = RuntimeFailure{"not executed"};

  bool completed() const { return std::holds_alternative<Completed>(outcome); }
  // Precondition: completed().
  const std::string& return_repr() const { return std::get<Completed>(outcome).value_repr; }
};

int event_depth(const TraceEvent& event);

// Debugger-style rendering, one newline-terminated line per event (plus one
// per call argument):
//
//   >>> Call to main_solution
//    ...... num = 100
//      38 | def main_solution(num):
//        >>> Call to main_solution
//   ...
//    <<< Return value from main_solution: '202'
//
// Call, argument, variable and return lines are indented 4*depth+1 spaces
// (the depth-0 call header is flush left); line numbers are right-aligned in a
// field 5+4*depth wide. Failed runs end with a "!!! " sentinel line.
std::string render_trace(const ExecutionTrace& trace);

// Number of lines render_trace would produce, without building the text.
std::size_t rendered_line_count(const ExecutionTrace& trace);

}  // namespace tracecot::runtime
