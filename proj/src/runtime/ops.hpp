#pragma once

// Operator and builtin semantics shared by the interpreter. Internal to the
// runtime library.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracecot/runtime/trace.hpp"
#include "tracecot/runtime/value.hpp"

namespace tracecot::runtime::detail {

// A runtime fault inside user code; becomes a RuntimeFailure outcome.
struct Fault {
  std::string message;
};

[[noreturn]] void raise(std::string_view kind, const std::string& message);

struct OpContext {
  const ExecutionLimits& limits;
  std::uint64_t& mutation_epoch;  // bumped on every in-place container change

  void check_size(std::size_t size) const;
  void mutated() const { ++mutation_epoch; }
};

using Kwargs = std::vector<std::pair<std::string, Value>>;

bool truthy(const Value& value);
std::string type_name(const Value& value);

Value binary_op(std::string_view op, const Value& lhs, const Value& rhs, const OpContext& ctx);
Value unary_op(std::string_view op, const Value& operand);
bool compare_op(std::string_view op, const Value& lhs, const Value& rhs);

// Snapshot of the items a for-loop or builtin would see.
std::vector<Value> iterate(const Value& iterable);

Value index_value(const Value& object, const Value& index);
Value slice_value(const Value& object, const Value* lower, const Value* upper, const Value* step);
void store_index(const Value& object, const Value& index, Value value, const OpContext& ctx);

Value call_builtin(std::string_view name, std::vector<Value> args, const Kwargs& kwargs,
                   const OpContext& ctx);
Value call_method(const Value& receiver, std::string_view name, std::vector<Value> args,
                  const Kwargs& kwargs, const OpContext& ctx);

}  // namespace tracecot::runtime::detail
