#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracecot::runtime::detail {

void raise(std::string_view kind, const std::string& message) {
  throw Fault{std::string(kind) + ": " + message};
}

void OpContext::check_size(std::size_t size) const {
  if (size > limits.max_collection_size) {
    raise("MemoryError", "collection of size " + std::to_string(size) + " exceeds limit " +
                             std::to_string(limits.max_collection_size));
  }
}

std::string type_name(const Value& value) { return std::string(tag_name(value.tag())); }

bool truthy(const Value& value) {
  switch (value.tag()) {
    case Tag::None: return false;
    case Tag::Boolean: return value.as_bool();
    case Tag::Integer: return value.as_int() != 0;
    case Tag::Float: return value.as_float() != 0.0;
    case Tag::Text: return !value.as_text().empty();
    case Tag::Sequence: return !value.as_sequence().empty();
    case Tag::Tuple: return !value.as_tuple().empty();
    case Tag::Mapping: return value.as_mapping().size() != 0;
  }
  return false;
}

namespace {

bool is_intlike(const Value& v) { return v.is(Tag::Integer) || v.is(Tag::Boolean); }
bool is_number(const Value& v) { return is_intlike(v) || v.is(Tag::Float); }

std::int64_t to_int(const Value& v) {
  return v.is(Tag::Boolean) ? (v.as_bool() ? 1 : 0) : v.as_int();
}

double to_double(const Value& v) {
  if (v.is(Tag::Float)) return v.as_float();
  return static_cast<double>(to_int(v));
}

[[noreturn]] void unsupported(std::string_view op, const Value& lhs, const Value& rhs) {
  raise("TypeError", "unsupported operand type(s) for " + std::string(op) + ": '" +
                         type_name(lhs) + "' and '" + type_name(rhs) + "'");
}

[[noreturn]] void overflow() { raise("OverflowError", "integer result exceeds 64-bit range"); }

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) overflow();
  return r;
}
std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) overflow();
  return r;
}
std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) overflow();
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) overflow();
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  if (b == -1) return 0;
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

// Float modulo and floor division with the sign conventions of the modelled language.
std::pair<double, double> float_divmod(double a, double b, bool for_floordiv) {
  if (b == 0.0) {
    raise("ZeroDivisionError", for_floordiv ? "float floor division by zero" : "float modulo");
  }
  double mod = std::fmod(a, b);
  double div = (a - mod) / b;
  if (mod != 0.0) {
    if ((b < 0) != (mod < 0)) {
      mod += b;
      div -= 1.0;
    }
  } else {
    mod = std::copysign(0.0, b);
  }
  double floordiv;
  if (div != 0.0) {
    floordiv = std::floor(div);
    if (div - floordiv > 0.5) floordiv += 1.0;
  } else {
    floordiv = std::copysign(0.0, a / b);
  }
  return {floordiv, mod};
}

Value int_pow(std::int64_t base, std::int64_t exp) {
  if (exp < 0) {
    if (base == 0) raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
    return Value(std::pow(static_cast<double>(base), static_cast<double>(exp)));
  }
  std::int64_t result = 1;
  std::int64_t b = base;
  while (exp > 0) {
    if (exp & 1) result = checked_mul(result, b);
    exp >>= 1;
    if (exp > 0) b = checked_mul(b, b);
  }
  return Value(result);
}

Value repeat(const Value& seq, std::int64_t times, const OpContext& ctx) {
  if (times < 0) times = 0;
  auto n = static_cast<std::size_t>(times);
  if (seq.is(Tag::Text)) {
    const std::string& s = seq.as_text();
    if (!s.empty() && n > 0) ctx.check_size(s.size() * std::min<std::size_t>(n, ctx.limits.max_collection_size + 1));
    std::string out;
    out.reserve(s.size() * n);
    for (std::size_t i = 0; i < n; ++i) out += s;
    return Value(std::move(out));
  }
  const auto& items = seq.is(Tag::Sequence) ? seq.as_sequence() : seq.as_tuple();
  if (!items.empty() && n > 0) ctx.check_size(items.size() * std::min<std::size_t>(n, ctx.limits.max_collection_size + 1));
  std::vector<Value> out;
  out.reserve(items.size() * n);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), items.begin(), items.end());
  return seq.is(Tag::Sequence) ? Value::sequence(std::move(out)) : Value::tuple(std::move(out));
}

std::vector<Value> concat(const std::vector<Value>& a, const std::vector<Value>& b,
                          const OpContext& ctx) {
  ctx.check_size(a.size() + b.size());
  std::vector<Value> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// -1, 0, 1; throws TypeError for unordered type pairs.
int order(const Value& a, const Value& b, std::string_view op) {
  if (is_number(a) && is_number(b)) {
    if (a.is(Tag::Float) || b.is(Tag::Float)) {
      double x = to_double(a), y = to_double(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    std::int64_t x = to_int(a), y = to_int(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (a.is(Tag::Text) && b.is(Tag::Text)) {
    int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  if ((a.is(Tag::Sequence) && b.is(Tag::Sequence)) || (a.is(Tag::Tuple) && b.is(Tag::Tuple))) {
    const auto& xs = a.is(Tag::Sequence) ? a.as_sequence() : a.as_tuple();
    const auto& ys = b.is(Tag::Sequence) ? b.as_sequence() : b.as_tuple();
    std::size_t n = std::min(xs.size(), ys.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (values_equal(xs[i], ys[i])) continue;
      return order(xs[i], ys[i], op);
    }
    return xs.size() < ys.size() ? -1 : (xs.size() > ys.size() ? 1 : 0);
  }
  raise("TypeError", "'" + std::string(op) + "' not supported between instances of '" +
                         type_name(a) + "' and '" + type_name(b) + "'");
}

bool contains(const Value& container, const Value& item) {
  switch (container.tag()) {
    case Tag::Text:
      if (!item.is(Tag::Text)) {
        raise("TypeError", "'in <string>' requires string as left operand, not " + type_name(item));
      }
      return container.as_text().find(item.as_text()) != std::string::npos;
    case Tag::Sequence:
    case Tag::Tuple: {
      const auto& items = container.is(Tag::Sequence) ? container.as_sequence() : container.as_tuple();
      return std::any_of(items.begin(), items.end(),
                         [&](const Value& v) { return values_equal(v, item); });
    }
    case Tag::Mapping: {
      auto key = Mapping::key_of(item);
      return key && container.as_mapping().find(*key) != nullptr;
    }
    default:
      raise("TypeError", "argument of type '" + type_name(container) + "' is not iterable");
  }
}

bool identical(const Value& a, const Value& b) {
  if (a.tag() != b.tag()) return false;
  if (a.identity() != nullptr) return a.identity() == b.identity();
  return values_equal(a, b);
}

std::int64_t normalize_index(std::int64_t index, std::size_t size, const char* what) {
  auto n = static_cast<std::int64_t>(size);
  if (index < 0) index += n;
  if (index < 0 || index >= n) raise("IndexError", std::string(what) + " index out of range");
  return index;
}

std::int64_t index_operand(const Value& index, const Value& object) {
  if (!is_intlike(index)) {
    raise("TypeError", type_name(object) + " indices must be integers, not " + type_name(index));
  }
  return to_int(index);
}

}  // namespace

Value binary_op(std::string_view op, const Value& lhs, const Value& rhs, const OpContext& ctx) {
  bool ints = is_intlike(lhs) && is_intlike(rhs);
  bool numbers = is_number(lhs) && is_number(rhs);
  if (op == "+") {
    if (ints) return Value(checked_add(to_int(lhs), to_int(rhs)));
    if (numbers) return Value(to_double(lhs) + to_double(rhs));
    if (lhs.is(Tag::Text) && rhs.is(Tag::Text)) {
      ctx.check_size(lhs.as_text().size() + rhs.as_text().size());
      return Value(lhs.as_text() + rhs.as_text());
    }
    if (lhs.is(Tag::Sequence) && rhs.is(Tag::Sequence)) {
      return Value::sequence(concat(lhs.as_sequence(), rhs.as_sequence(), ctx));
    }
    if (lhs.is(Tag::Tuple) && rhs.is(Tag::Tuple)) {
      return Value::tuple(concat(lhs.as_tuple(), rhs.as_tuple(), ctx));
    }
    unsupported(op, lhs, rhs);
  }
  if (op == "-") {
    if (ints) return Value(checked_sub(to_int(lhs), to_int(rhs)));
    if (numbers) return Value(to_double(lhs) - to_double(rhs));
    unsupported(op, lhs, rhs);
  }
  if (op == "*") {
    if (ints) return Value(checked_mul(to_int(lhs), to_int(rhs)));
    if (numbers) return Value(to_double(lhs) * to_double(rhs));
    auto is_repeatable = [](const Value& v) {
      return v.is(Tag::Text) || v.is(Tag::Sequence) || v.is(Tag::Tuple);
    };
    if (is_repeatable(lhs) && is_intlike(rhs)) return repeat(lhs, to_int(rhs), ctx);
    if (is_intlike(lhs) && is_repeatable(rhs)) return repeat(rhs, to_int(lhs), ctx);
    unsupported(op, lhs, rhs);
  }
  if (op == "/") {
    if (!numbers) unsupported(op, lhs, rhs);
    double d = to_double(rhs);
    if (d == 0.0) raise("ZeroDivisionError", "division by zero");
    return Value(to_double(lhs) / d);
  }
  if (op == "//") {
    if (ints) return Value(floor_div(to_int(lhs), to_int(rhs)));
    if (numbers) return Value(float_divmod(to_double(lhs), to_double(rhs), true).first);
    unsupported(op, lhs, rhs);
  }
  if (op == "%") {
    if (ints) return Value(floor_mod(to_int(lhs), to_int(rhs)));
    if (numbers) return Value(float_divmod(to_double(lhs), to_double(rhs), false).second);
    if (lhs.is(Tag::Text)) raise("TypeError", "string formatting expressions are not supported");
    unsupported(op, lhs, rhs);
  }
  if (op == "**") {
    if (ints) return int_pow(to_int(lhs), to_int(rhs));
    if (numbers) {
      double base = to_double(lhs), exp = to_double(rhs);
      if (base == 0.0 && exp < 0) raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
      if (base < 0 && exp != std::floor(exp)) {
        raise("ValueError", "negative number cannot be raised to a fractional power");
      }
      return Value(std::pow(base, exp));
    }
    unsupported(op, lhs, rhs);
  }
  raise("SyntaxError", "unknown operator '" + std::string(op) + "'");
}

Value unary_op(std::string_view op, const Value& operand) {
  if (op == "not") return Value(!truthy(operand));
  if (!is_number(operand)) {
    raise("TypeError", "bad operand type for unary " + std::string(op) + ": '" +
                           type_name(operand) + "'");
  }
  if (op == "+") return operand.is(Tag::Boolean) ? Value(to_int(operand)) : operand;
  if (operand.is(Tag::Float)) return Value(-operand.as_float());
  return Value(checked_sub(0, to_int(operand)));
}

bool compare_op(std::string_view op, const Value& lhs, const Value& rhs) {
  if (op == "==") return values_equal(lhs, rhs);
  if (op == "!=") return !values_equal(lhs, rhs);
  if (op == "<") return order(lhs, rhs, op) < 0;
  if (op == "<=") return order(lhs, rhs, op) <= 0;
  if (op == ">") return order(lhs, rhs, op) > 0;
  if (op == ">=") return order(lhs, rhs, op) >= 0;
  if (op == "in") return contains(rhs, lhs);
  if (op == "not in") return !contains(rhs, lhs);
  if (op == "is") return identical(lhs, rhs);
  if (op == "is not") return !identical(lhs, rhs);
  raise("SyntaxError", "unknown comparison '" + std::string(op) + "'");
}

std::vector<Value> iterate(const Value& iterable) {
  switch (iterable.tag()) {
    case Tag::Sequence: return iterable.as_sequence();
    case Tag::Tuple: return iterable.as_tuple();
    case Tag::Text: {
      std::vector<Value> out;
      for (char c : iterable.as_text()) out.emplace_back(std::string(1, c));
      return out;
    }
    case Tag::Mapping: {
      std::vector<Value> out;
      for (const auto& [k, v] : iterable.as_mapping().entries()) out.push_back(k);
      return out;
    }
    default:
      raise("TypeError", "'" + type_name(iterable) + "' object is not iterable");
  }
}

Value index_value(const Value& object, const Value& index) {
  switch (object.tag()) {
    case Tag::Sequence: {
      const auto& items = object.as_sequence();
      return items[static_cast<std::size_t>(normalize_index(index_operand(index, object), items.size(), "list"))];
    }
    case Tag::Tuple: {
      const auto& items = object.as_tuple();
      return items[static_cast<std::size_t>(normalize_index(index_operand(index, object), items.size(), "tuple"))];
    }
    case Tag::Text: {
      const auto& s = object.as_text();
      auto i = normalize_index(index_operand(index, object), s.size(), "string");
      return Value(std::string(1, s[static_cast<std::size_t>(i)]));
    }
    case Tag::Mapping: {
      auto key = Mapping::key_of(index);
      if (!key) raise("TypeError", "unsupported dict key type: '" + type_name(index) + "'");
      const Value* found = object.as_mapping().find(*key);
      if (found == nullptr) raise("KeyError", repr_value(index));
      return *found;
    }
    default:
      raise("TypeError", "'" + type_name(object) + "' object is not subscriptable");
  }
}

Value slice_value(const Value& object, const Value* lower, const Value* upper, const Value* step) {
  auto bound = [&](const Value* v, const char* what) -> std::optional<std::int64_t> {
    if (v == nullptr || v->is(Tag::None)) return std::nullopt;
    if (!is_intlike(*v)) {
      raise("TypeError", std::string("slice ") + what + " must be an integer or None");
    }
    return to_int(*v);
  };
  std::int64_t stride = bound(step, "step").value_or(1);
  if (stride == 0) raise("ValueError", "slice step cannot be zero");

  std::size_t size;
  switch (object.tag()) {
    case Tag::Sequence: size = object.as_sequence().size(); break;
    case Tag::Tuple: size = object.as_tuple().size(); break;
    case Tag::Text: size = object.as_text().size(); break;
    default: raise("TypeError", "'" + type_name(object) + "' object is not subscriptable");
  }
  auto n = static_cast<std::int64_t>(size);
  auto adjust = [&](std::optional<std::int64_t> v, std::int64_t dflt) {
    if (!v) return dflt;
    std::int64_t x = *v;
    if (x < 0) {
      x += n;
      if (x < 0) x = stride < 0 ? -1 : 0;
    } else if (x >= n) {
      x = stride < 0 ? n - 1 : n;
    }
    return x;
  };
  std::int64_t start = adjust(bound(lower, "indices"), stride < 0 ? n - 1 : 0);
  std::int64_t stop = adjust(bound(upper, "indices"), stride < 0 ? -1 : n);

  std::vector<std::size_t> picks;
  for (std::int64_t i = start; stride > 0 ? i < stop : i > stop; i += stride) {
    picks.push_back(static_cast<std::size_t>(i));
  }
  if (object.is(Tag::Text)) {
    std::string out;
    for (auto i : picks) out.push_back(object.as_text()[i]);
    return Value(std::move(out));
  }
  const auto& items = object.is(Tag::Sequence) ? object.as_sequence() : object.as_tuple();
  std::vector<Value> out;
  out.reserve(picks.size());
  for (auto i : picks) out.push_back(items[i]);
  return object.is(Tag::Sequence) ? Value::sequence(std::move(out)) : Value::tuple(std::move(out));
}

void store_index(const Value& object, const Value& index, Value value, const OpContext& ctx) {
  switch (object.tag()) {
    case Tag::Sequence: {
      auto& items = object.as_sequence();
      if (!is_intlike(index)) {
        raise("TypeError", "list indices must be integers, not " + type_name(index));
      }
      std::int64_t i = to_int(index);
      auto n = static_cast<std::int64_t>(items.size());
      if (i < 0) i += n;
      if (i < 0 || i >= n) raise("IndexError", "list assignment index out of range");
      items[static_cast<std::size_t>(i)] = std::move(value);
      ctx.mutated();
      return;
    }
    case Tag::Mapping: {
      if (!Mapping::key_of(index)) {
        raise("TypeError", "unsupported dict key type: '" + type_name(index) + "'");
      }
      object.as_mapping().set(index, std::move(value));
      ctx.check_size(object.as_mapping().size());
      ctx.mutated();
      return;
    }
    default:
      raise("TypeError", "'" + type_name(object) + "' object does not support item assignment");
  }
}

}  // namespace tracecot::runtime::detail
