#pragma once

#include <optional>

#include "tracecot/lang/program.hpp"
#include "tracecot/runtime/trace.hpp"
#include "tracecot/runtime/value.hpp"

namespace tracecot::runtime {

struct ExecutionResult {
  std::optional<Value> value;  // set iff trace.completed()
  ExecutionTrace trace;
};

// Runs the program's entry function on `input` under full tracing. Runtime
// faults and budget exhaustion are reported through trace.outcome; an input
// binding that does not match the entry parameters throws Error("input_mismatch").
//
// Every user-defined function call is traced. Builtins and methods are not.
ExecutionResult execute(const lang::SourceProgram& program, const Binding& input,
                        const ExecutionLimits& limits = {});

}  // namespace tracecot::runtime
