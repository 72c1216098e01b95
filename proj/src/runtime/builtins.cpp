#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

#include "ops.hpp"

namespace tracecot::runtime::detail {

namespace {

bool is_intlike(const Value& v) { return v.is(Tag::Integer) || v.is(Tag::Boolean); }

std::int64_t to_int(const Value& v) {
  return v.is(Tag::Boolean) ? (v.as_bool() ? 1 : 0) : v.as_int();
}

class Args {
 public:
  Args(std::string_view fn, std::vector<Value>& positional, const Kwargs& kwargs)
      : fn_(fn), positional_(positional), kwargs_(kwargs) {}

  void arity(std::size_t min, std::size_t max) const {
    if (positional_.size() < min || positional_.size() > max) {
      std::string expected = min == max ? std::to_string(min)
                                        : std::to_string(min) + " to " + std::to_string(max);
      raise("TypeError", std::string(fn_) + "() takes " + expected + " positional argument(s) but " +
                             std::to_string(positional_.size()) + " were given");
    }
  }

  void allow_keywords(std::initializer_list<std::string_view> names) const {
    for (const auto& [name, value] : kwargs_) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        raise("TypeError", std::string(fn_) + "() got an unexpected keyword argument '" + name + "'");
      }
    }
  }

  // Positional slot `index`, else keyword `name`.
  const Value* get(std::size_t index, std::string_view name) const {
    if (index < positional_.size()) return &positional_[index];
    for (const auto& [k, v] : kwargs_) {
      if (k == name) return &v;
    }
    return nullptr;
  }

  std::size_t size() const { return positional_.size(); }
  Value& operator[](std::size_t i) const { return positional_[i]; }

  std::int64_t integer(std::size_t index, std::string_view name, std::int64_t fallback) const {
    const Value* v = get(index, name);
    if (v == nullptr) return fallback;
    if (!is_intlike(*v)) {
      raise("TypeError", "'" + type_name(*v) + "' object cannot be interpreted as an integer");
    }
    return to_int(*v);
  }

 private:
  std::string_view fn_;
  std::vector<Value>& positional_;
  const Kwargs& kwargs_;
};

std::string strip_whitespace(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

Value parse_int(const std::string& text, std::int64_t base) {
  auto invalid = [&]() -> Value {
    raise("ValueError", "invalid literal for int() with base " + std::to_string(base) + ": " +
                            repr_text(text));
  };
  if (base != 0 && (base < 2 || base > 36)) raise("ValueError", "int() base must be >= 2 and <= 36, or 0");
  std::string s = strip_whitespace(text);
  bool negative = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  if (base == 0) base = 10;
  std::string digits;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '_' && i > 0 && i + 1 < s.size() && s[i - 1] != '_') continue;
    digits.push_back(s[i]);
  }
  if (digits.empty()) return invalid();
  std::uint64_t magnitude = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), magnitude,
                                   static_cast<int>(base));
  if (ec == std::errc::result_out_of_range) raise("OverflowError", "integer literal exceeds 64-bit range");
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return invalid();
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (negative) {
    if (magnitude > kMax + 1) raise("OverflowError", "integer literal exceeds 64-bit range");
    return Value(magnitude == kMax + 1 ? std::numeric_limits<std::int64_t>::min()
                                       : -static_cast<std::int64_t>(magnitude));
  }
  if (magnitude > kMax) raise("OverflowError", "integer literal exceeds 64-bit range");
  return Value(static_cast<std::int64_t>(magnitude));
}

Value parse_float(const std::string& text) {
  std::string s = strip_whitespace(text);
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string body = lower;
  double sign = 1.0;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
    sign = body[0] == '-' ? -1.0 : 1.0;
    body.erase(0, 1);
  }
  if (body == "inf" || body == "infinity") return Value(sign * std::numeric_limits<double>::infinity());
  if (body == "nan") return Value(std::numeric_limits<double>::quiet_NaN());
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (body.empty() || ptr != body.data() + body.size() ||
      (ec != std::errc() && ec != std::errc::result_out_of_range)) {
    raise("ValueError", "could not convert string to float: " + repr_text(text));
  }
  if (ec == std::errc::result_out_of_range) value = std::strtod(body.c_str(), nullptr);
  return Value(sign * value);
}

Value float_to_int(double d) {
  if (std::isnan(d)) raise("ValueError", "cannot convert float NaN to integer");
  if (std::isinf(d)) raise("OverflowError", "cannot convert float infinity to integer");
  double t = std::trunc(d);
  if (t < -9223372036854775808.0 || t >= 9223372036854775808.0) {
    raise("OverflowError", "integer result exceeds 64-bit range");
  }
  return Value(static_cast<std::int64_t>(t));
}

Value extremum(std::string_view fn, Args& args, bool want_max) {
  args.allow_keywords({});
  if (args.size() == 0) raise("TypeError", std::string(fn) + " expected at least 1 argument, got 0");
  std::vector<Value> items = args.size() == 1 ? iterate(args[0])
                                              : std::vector<Value>(&args[0], &args[0] + args.size());
  if (items.empty()) raise("ValueError", std::string(fn) + "() arg is an empty sequence");
  Value best = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (compare_op(want_max ? ">" : "<", items[i], best)) best = items[i];
  }
  return best;
}

void permute(const std::vector<Value>& pool, std::size_t r, std::vector<std::size_t>& picked,
             std::vector<bool>& used, std::vector<Value>& out) {
  if (picked.size() == r) {
    std::vector<Value> perm;
    perm.reserve(r);
    for (auto i : picked) perm.push_back(pool[i]);
    out.push_back(Value::tuple(std::move(perm)));
    return;
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    picked.push_back(i);
    permute(pool, r, picked, used, out);
    picked.pop_back();
    used[i] = false;
  }
}

// n! / (n-r)!, saturating at max + 1.
std::size_t permutation_count(std::size_t n, std::size_t r, std::size_t max) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < r; ++i) {
    count *= (n - i);
    if (count > max) return max + 1;
  }
  return count;
}

}  // namespace

Value call_builtin(std::string_view name, std::vector<Value> positional, const Kwargs& kwargs,
                   const OpContext& ctx) {
  Args args(name, positional, kwargs);
  if (name == "len") {
    args.allow_keywords({});
    args.arity(1, 1);
    const Value& v = args[0];
    switch (v.tag()) {
      case Tag::Text: return Value(static_cast<std::int64_t>(v.as_text().size()));
      case Tag::Sequence: return Value(static_cast<std::int64_t>(v.as_sequence().size()));
      case Tag::Tuple: return Value(static_cast<std::int64_t>(v.as_tuple().size()));
      case Tag::Mapping: return Value(static_cast<std::int64_t>(v.as_mapping().size()));
      default: raise("TypeError", "object of type '" + type_name(v) + "' has no len()");
    }
  }
  if (name == "str") {
    args.allow_keywords({});
    args.arity(0, 1);
    if (args.size() == 0) return Value(std::string());
    if (args[0].is(Tag::Text)) return args[0];
    return Value(repr_value(args[0]));
  }
  if (name == "int") {
    args.allow_keywords({"base"});
    args.arity(0, 2);
    const Value* v = args.get(0, "x");
    if (v == nullptr) return Value(std::int64_t{0});
    if (const Value* base = args.get(1, "base")) {
      if (!v->is(Tag::Text)) raise("TypeError", "int() can't convert non-string with explicit base");
      if (!is_intlike(*base)) raise("TypeError", "int() base must be an integer");
      return parse_int(v->as_text(), to_int(*base));
    }
    switch (v->tag()) {
      case Tag::Integer: return *v;
      case Tag::Boolean: return Value(to_int(*v));
      case Tag::Float: return float_to_int(v->as_float());
      case Tag::Text: return parse_int(v->as_text(), 10);
      default:
        raise("TypeError", "int() argument must be a string or a number, not '" + type_name(*v) + "'");
    }
  }
  if (name == "float") {
    args.allow_keywords({});
    args.arity(0, 1);
    if (args.size() == 0) return Value(0.0);
    const Value& v = args[0];
    switch (v.tag()) {
      case Tag::Float: return v;
      case Tag::Integer:
      case Tag::Boolean: return Value(static_cast<double>(to_int(v)));
      case Tag::Text: return parse_float(v.as_text());
      default:
        raise("TypeError", "float() argument must be a string or a number, not '" + type_name(v) + "'");
    }
  }
  if (name == "abs") {
    args.allow_keywords({});
    args.arity(1, 1);
    const Value& v = args[0];
    if (v.is(Tag::Float)) return Value(std::fabs(v.as_float()));
    if (!is_intlike(v)) raise("TypeError", "bad operand type for abs(): '" + type_name(v) + "'");
    std::int64_t i = to_int(v);
    if (i == std::numeric_limits<std::int64_t>::min()) {
      raise("OverflowError", "integer result exceeds 64-bit range");
    }
    return Value(i < 0 ? -i : i);
  }
  if (name == "min") return extremum(name, args, false);
  if (name == "max") return extremum(name, args, true);
  if (name == "sum") {
    args.allow_keywords({"start"});
    args.arity(1, 2);
    const Value* start = args.get(1, "start");
    Value total = start != nullptr ? *start : Value(std::int64_t{0});
    if (total.is(Tag::Text)) raise("TypeError", "sum() can't sum strings [use ''.join(seq) instead]");
    for (const auto& item : iterate(args[0])) total = binary_op("+", total, item, ctx);
    return total;
  }
  if (name == "sorted") {
    args.allow_keywords({"reverse"});
    args.arity(1, 1);
    const Value* reverse = args.get(1, "reverse");
    bool descending = reverse != nullptr && truthy(*reverse);
    std::vector<Value> items = iterate(args[0]);
    std::stable_sort(items.begin(), items.end(), [&](const Value& a, const Value& b) {
      return descending ? compare_op(">", a, b) : compare_op("<", a, b);
    });
    return Value::sequence(std::move(items));
  }
  if (name == "range") {
    args.allow_keywords({});
    args.arity(1, 3);
    std::int64_t start = 0, stop, step = 1;
    if (args.size() == 1) {
      stop = args.integer(0, "", 0);
    } else {
      start = args.integer(0, "", 0);
      stop = args.integer(1, "", 0);
      step = args.integer(2, "", 1);
    }
    if (step == 0) raise("ValueError", "range() arg 3 must not be zero");
    // Differences are taken in unsigned arithmetic so extreme bounds cannot overflow.
    std::uint64_t length = 0;
    if (step > 0 && stop > start) {
      std::uint64_t span = static_cast<std::uint64_t>(stop) - static_cast<std::uint64_t>(start);
      length = (span - 1) / static_cast<std::uint64_t>(step) + 1;
    } else if (step < 0 && start > stop) {
      std::uint64_t span = static_cast<std::uint64_t>(start) - static_cast<std::uint64_t>(stop);
      std::uint64_t mag = std::uint64_t{0} - static_cast<std::uint64_t>(step);
      length = (span - 1) / mag + 1;
    }
    if (length > ctx.limits.max_collection_size) ctx.check_size(ctx.limits.max_collection_size + 1);
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(length));
    std::uint64_t v = static_cast<std::uint64_t>(start);
    for (std::uint64_t i = 0; i < length; ++i) {
      out.emplace_back(static_cast<std::int64_t>(v));
      v += static_cast<std::uint64_t>(step);
    }
    return Value::sequence(std::move(out));
  }
  if (name == "list") {
    args.allow_keywords({});
    args.arity(0, 1);
    if (args.size() == 0) return Value::sequence();
    return Value::sequence(iterate(args[0]));
  }
  if (name == "enumerate") {
    args.allow_keywords({"start"});
    args.arity(1, 2);
    std::int64_t index = args.integer(1, "start", 0);
    std::vector<Value> out;
    for (auto& item : iterate(args[0])) {
      out.push_back(Value::tuple({Value(index), std::move(item)}));
      ++index;
    }
    return Value::sequence(std::move(out));
  }
  if (name == "permutations") {
    args.allow_keywords({"r"});
    args.arity(1, 2);
    std::vector<Value> pool = iterate(args[0]);
    const Value* r_value = args.get(1, "r");
    std::size_t r = pool.size();
    if (r_value != nullptr && !r_value->is(Tag::None)) {
      std::int64_t rr = args.integer(1, "r", 0);
      if (rr < 0) raise("ValueError", "r must be non-negative");
      r = static_cast<std::size_t>(rr);
    }
    if (r > pool.size()) return Value::sequence();
    ctx.check_size(permutation_count(pool.size(), r, ctx.limits.max_collection_size));
    std::vector<Value> out;
    std::vector<std::size_t> picked;
    std::vector<bool> used(pool.size(), false);
    permute(pool, r, picked, used, out);
    return Value::sequence(std::move(out));
  }
  raise("NameError", "name '" + std::string(name) + "' is not defined");
}

namespace {

Value text_method(const std::string& self, std::string_view name, Args& args,
                  const OpContext& ctx) {
  if (name == "join") {
    args.allow_keywords({});
    args.arity(1, 1);
    std::string out;
    std::size_t i = 0;
    for (const auto& item : iterate(args[0])) {
      if (!item.is(Tag::Text)) {
        raise("TypeError", "sequence item " + std::to_string(i) + ": expected str instance, " +
                               type_name(item) + " found");
      }
      if (i++ != 0) out += self;
      out += item.as_text();
      ctx.check_size(out.size());
    }
    return Value(std::move(out));
  }
  if (name == "split") {
    args.allow_keywords({"sep", "maxsplit"});
    args.arity(0, 2);
    const Value* sep = args.get(0, "sep");
    std::int64_t maxsplit = args.integer(1, "maxsplit", -1);
    std::vector<Value> parts;
    if (sep == nullptr || sep->is(Tag::None)) {
      std::size_t i = 0;
      while (true) {
        while (i < self.size() && std::isspace(static_cast<unsigned char>(self[i]))) ++i;
        if (i >= self.size()) break;
        if (maxsplit >= 0 && static_cast<std::int64_t>(parts.size()) == maxsplit) {
          std::string rest = self.substr(i);
          while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.pop_back();
          parts.emplace_back(std::move(rest));
          break;
        }
        std::size_t j = i;
        while (j < self.size() && !std::isspace(static_cast<unsigned char>(self[j]))) ++j;
        parts.emplace_back(self.substr(i, j - i));
        i = j;
      }
    } else {
      if (!sep->is(Tag::Text)) raise("TypeError", "must be str or None, not " + type_name(*sep));
      const std::string& s = sep->as_text();
      if (s.empty()) raise("ValueError", "empty separator");
      std::size_t start = 0;
      while (true) {
        std::size_t pos = self.find(s, start);
        if (pos == std::string::npos ||
            (maxsplit >= 0 && static_cast<std::int64_t>(parts.size()) == maxsplit)) {
          parts.emplace_back(self.substr(start));
          break;
        }
        parts.emplace_back(self.substr(start, pos - start));
        start = pos + s.size();
      }
    }
    ctx.check_size(parts.size());
    return Value::sequence(std::move(parts));
  }
  if (name == "upper" || name == "lower") {
    args.allow_keywords({});
    args.arity(0, 0);
    std::string out = self;
    for (char& c : out) {
      auto u = static_cast<unsigned char>(c);
      c = static_cast<char>(name == "upper" ? std::toupper(u) : std::tolower(u));
    }
    return Value(std::move(out));
  }
  if (name == "strip") {
    args.allow_keywords({});
    args.arity(0, 1);
    if (args.size() == 0 || args[0].is(Tag::None)) return Value(strip_whitespace(self));
    if (!args[0].is(Tag::Text)) raise("TypeError", "strip arg must be None or str");
    const std::string& chars = args[0].as_text();
    std::size_t b = self.find_first_not_of(chars);
    if (b == std::string::npos) return Value(std::string());
    std::size_t e = self.find_last_not_of(chars);
    return Value(self.substr(b, e - b + 1));
  }
  if (name == "index") {
    args.allow_keywords({});
    args.arity(1, 1);
    if (!args[0].is(Tag::Text)) raise("TypeError", "must be str, not " + type_name(args[0]));
    std::size_t pos = self.find(args[0].as_text());
    if (pos == std::string::npos) raise("ValueError", "substring not found");
    return Value(static_cast<std::int64_t>(pos));
  }
  raise("AttributeError", "'str' object has no attribute '" + std::string(name) + "'");
}

std::int64_t find_index(const std::vector<Value>& items, const Value& needle, const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (values_equal(items[i], needle)) return static_cast<std::int64_t>(i);
  }
  raise("ValueError", repr_value(needle) + " is not in " + what);
}

Value sequence_method(const Value& self, std::string_view name, Args& args, const OpContext& ctx) {
  auto& items = self.as_sequence();
  if (name == "append") {
    args.allow_keywords({});
    args.arity(1, 1);
    ctx.check_size(items.size() + 1);
    items.push_back(args[0]);
    ctx.mutated();
    return Value();
  }
  if (name == "pop") {
    args.allow_keywords({});
    args.arity(0, 1);
    if (items.empty()) raise("IndexError", "pop from empty list");
    std::int64_t i = args.integer(0, "", -1);
    auto n = static_cast<std::int64_t>(items.size());
    if (i < 0) i += n;
    if (i < 0 || i >= n) raise("IndexError", "pop index out of range");
    Value out = std::move(items[static_cast<std::size_t>(i)]);
    items.erase(items.begin() + i);
    ctx.mutated();
    return out;
  }
  if (name == "insert") {
    args.allow_keywords({});
    args.arity(2, 2);
    std::int64_t i = args.integer(0, "", 0);
    auto n = static_cast<std::int64_t>(items.size());
    if (i < 0) i = std::max<std::int64_t>(0, i + n);
    i = std::min(i, n);
    ctx.check_size(items.size() + 1);
    items.insert(items.begin() + i, args[1]);
    ctx.mutated();
    return Value();
  }
  if (name == "remove") {
    args.allow_keywords({});
    args.arity(1, 1);
    for (auto it = items.begin(); it != items.end(); ++it) {
      if (values_equal(*it, args[0])) {
        items.erase(it);
        ctx.mutated();
        return Value();
      }
    }
    raise("ValueError", "list.remove(x): x not in list");
  }
  if (name == "index") {
    args.allow_keywords({});
    args.arity(1, 1);
    return Value(find_index(items, args[0], "list"));
  }
  raise("AttributeError", "'list' object has no attribute '" + std::string(name) + "'");
}

Value mapping_method(const Value& self, std::string_view name, Args& args, const OpContext& ctx) {
  Mapping& map = self.as_mapping();
  auto key_arg = [&](const Value& k) {
    auto key = Mapping::key_of(k);
    if (!key) raise("TypeError", "unsupported dict key type: '" + type_name(k) + "'");
    return *key;
  };
  if (name == "get") {
    args.allow_keywords({});
    args.arity(1, 2);
    const Value* found = map.find(key_arg(args[0]));
    if (found != nullptr) return *found;
    return args.size() > 1 ? args[1] : Value();
  }
  if (name == "pop") {
    args.allow_keywords({});
    args.arity(1, 2);
    auto key = key_arg(args[0]);
    const Value* found = map.find(key);
    if (found == nullptr) {
      if (args.size() > 1) return args[1];
      raise("KeyError", repr_value(args[0]));
    }
    Value out = *found;
    map.erase(key);
    ctx.mutated();
    return out;
  }
  if (name == "keys" || name == "values" || name == "items") {
    args.allow_keywords({});
    args.arity(0, 0);
    std::vector<Value> out;
    out.reserve(map.size());
    for (const auto& [k, v] : map.entries()) {
      if (name == "keys") {
        out.push_back(k);
      } else if (name == "values") {
        out.push_back(v);
      } else {
        out.push_back(Value::tuple({k, v}));
      }
    }
    return Value::sequence(std::move(out));
  }
  raise("AttributeError", "'dict' object has no attribute '" + std::string(name) + "'");
}

}  // namespace

Value call_method(const Value& receiver, std::string_view name, std::vector<Value> positional,
                  const Kwargs& kwargs, const OpContext& ctx) {
  Args args(name, positional, kwargs);
  switch (receiver.tag()) {
    case Tag::Text: return text_method(receiver.as_text(), name, args, ctx);
    case Tag::Sequence: return sequence_method(receiver, name, args, ctx);
    case Tag::Mapping: return mapping_method(receiver, name, args, ctx);
    case Tag::Tuple:
      if (name == "index") {
        args.allow_keywords({});
        args.arity(1, 1);
        return Value(find_index(receiver.as_tuple(), args[0], "tuple"));
      }
      [[fallthrough]];
    default:
      raise("AttributeError",
            "'" + type_name(receiver) + "' object has no attribute '" + std::string(name) + "'");
  }
}

}  // namespace tracecot::runtime::detail
