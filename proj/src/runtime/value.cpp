#include "tracecot/runtime/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "tracecot/common/error.hpp"

namespace tracecot::runtime {

Value Value::sequence(std::vector<Value> items) {
  Value v;
  v.data_ = SequenceRef{std::make_shared<std::vector<Value>>(std::move(items))};
  return v;
}

Value Value::tuple(std::vector<Value> items) {
  Value v;
  v.data_ = TupleRef{std::make_shared<const std::vector<Value>>(std::move(items))};
  return v;
}

Value Value::mapping() {
  Value v;
  v.data_ = MappingRef{std::make_shared<Mapping>()};
  return v;
}

const void* Value::identity() const {
  switch (tag()) {
    case Tag::Sequence: return std::get<SequenceRef>(data_).items.get();
    case Tag::Tuple: return std::get<TupleRef>(data_).items.get();
    case Tag::Mapping: return std::get<MappingRef>(data_).map.get();
    default: return nullptr;
  }
}

std::optional<Mapping::Key> Mapping::key_of(const Value& value) {
  if (value.is(Tag::Integer)) return Key{value.as_int()};
  if (value.is(Tag::Text)) return Key{value.as_text()};
  return std::nullopt;
}

const Value* Mapping::find(const Key& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

void Mapping::set(const Value& key, Value value) {
  Key k = *key_of(key);
  if (auto it = index_.find(k); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_.emplace(std::move(k), entries_.size());
  entries_.emplace_back(key, std::move(value));
}

bool Mapping::erase(const Key& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return false;
  std::size_t slot = it->second;
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(slot));
  index_.erase(it);
  for (auto& [k, pos] : index_) {
    if (pos > slot) --pos;
  }
  return true;
}

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::None: return "NoneType";
    case Tag::Boolean: return "bool";
    case Tag::Integer: return "int";
    case Tag::Float: return "float";
    case Tag::Text: return "str";
    case Tag::Sequence: return "list";
    case Tag::Tuple: return "tuple";
    case Tag::Mapping: return "dict";
  }
  return "?";
}

std::string repr_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";

  // Shortest round-trip digits in d.ddde[+-]x form, then re-laid-out.
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  std::string sci(buf, end);
  bool negative = sci.front() == '-';
  if (negative) sci.erase(0, 1);
  std::size_t e_pos = sci.find('e');
  std::string mantissa = sci.substr(0, e_pos);
  int exponent = std::stoi(sci.substr(e_pos + 1));
  std::string digits;
  for (char c : mantissa) {
    if (c != '.') digits.push_back(c);
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();

  std::string out = negative ? "-" : "";
  if (exponent >= -4 && exponent < 16) {
    // scientific exponent e means the value is d.ddd * 10^e
    int point = exponent + 1;  // digits before the decimal point
    if (point <= 0) {
      out += "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
    } else if (point >= static_cast<int>(digits.size())) {
      out += digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0') + ".0";
    } else {
      out += digits.substr(0, static_cast<std::size_t>(point)) + "." +
             digits.substr(static_cast<std::size_t>(point));
    }
    return out;
  }
  out += digits.substr(0, 1);
  if (digits.size() > 1) out += "." + digits.substr(1);
  char exp_buf[16];
  std::snprintf(exp_buf, sizeof exp_buf, "e%c%02d", exponent < 0 ? '-' : '+', std::abs(exponent));
  return out + exp_buf;
}

std::string repr_text(std::string_view text) {
  std::string out = "'";
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          char hex[5];
          std::snprintf(hex, sizeof hex, "\\x%02x", c);
          out += hex;
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('\'');
  return out;
}

namespace {

void repr_into(const Value& value, std::string& out, std::set<const void*>& active) {
  switch (value.tag()) {
    case Tag::None: out += "None"; return;
    case Tag::Boolean: out += value.as_bool() ? "True" : "False"; return;
    case Tag::Integer: out += std::to_string(value.as_int()); return;
    case Tag::Float: out += repr_float(value.as_float()); return;
    case Tag::Text: out += repr_text(value.as_text()); return;
    default: break;
  }
  const void* id = value.identity();
  const char* open = value.is(Tag::Sequence) ? "[" : value.is(Tag::Tuple) ? "(" : "{";
  const char* close = value.is(Tag::Sequence) ? "]" : value.is(Tag::Tuple) ? ")" : "}";
  if (active.count(id) != 0) {
    out += open;
    out += "...";
    out += close;
    return;
  }
  active.insert(id);
  out += open;
  if (value.is(Tag::Mapping)) {
    bool first = true;
    for (const auto& [k, v] : value.as_mapping().entries()) {
      if (!first) out += ", ";
      first = false;
      repr_into(k, out, active);
      out += ": ";
      repr_into(v, out, active);
    }
  } else {
    const auto& items = value.is(Tag::Sequence) ? value.as_sequence() : value.as_tuple();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i != 0) out += ", ";
      repr_into(items[i], out, active);
    }
    if (value.is(Tag::Tuple) && items.size() == 1) out += ",";
  }
  out += close;
  active.erase(id);
}

bool is_numeric(const Value& v) {
  return v.is(Tag::Integer) || v.is(Tag::Float) || v.is(Tag::Boolean);
}

}  // namespace

std::string repr_value(const Value& value) {
  std::string out;
  std::set<const void*> active;
  repr_into(value, out, active);
  return out;
}

bool values_equal(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) {
    if (a.is(Tag::Float) || b.is(Tag::Float)) {
      auto as_double = [](const Value& v) {
        if (v.is(Tag::Float)) return v.as_float();
        if (v.is(Tag::Boolean)) return v.as_bool() ? 1.0 : 0.0;
        return static_cast<double>(v.as_int());
      };
      return as_double(a) == as_double(b);
    }
    auto as_int = [](const Value& v) -> std::int64_t {
      return v.is(Tag::Boolean) ? (v.as_bool() ? 1 : 0) : v.as_int();
    };
    return as_int(a) == as_int(b);
  }
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case Tag::None: return true;
    case Tag::Text: return a.as_text() == b.as_text();
    case Tag::Sequence:
    case Tag::Tuple: {
      if (a.identity() == b.identity()) return true;
      const auto& xs = a.is(Tag::Sequence) ? a.as_sequence() : a.as_tuple();
      const auto& ys = b.is(Tag::Sequence) ? b.as_sequence() : b.as_tuple();
      if (xs.size() != ys.size()) return false;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!values_equal(xs[i], ys[i])) return false;
      }
      return true;
    }
    case Tag::Mapping: {
      if (a.identity() == b.identity()) return true;
      const Mapping& ma = a.as_mapping();
      const Mapping& mb = b.as_mapping();
      if (ma.size() != mb.size()) return false;
      for (const auto& [k, v] : ma.entries()) {
        const Value* other = mb.find(*Mapping::key_of(k));
        if (other == nullptr || !values_equal(v, *other)) return false;
      }
      return true;
    }
    default: return false;
  }
}

Value value_from_json(const nlohmann::ordered_json& json) {
  using Type = nlohmann::ordered_json::value_t;
  switch (json.type()) {
    case Type::null: return Value();
    case Type::boolean: return Value(json.get<bool>());
    case Type::number_integer: return Value(json.get<std::int64_t>());
    case Type::number_unsigned: {
      auto u = json.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw Error("invalid_input", "integer " + std::to_string(u) + " exceeds 64-bit range");
      }
      return Value(static_cast<std::int64_t>(u));
    }
    case Type::number_float: return Value(json.get<double>());
    case Type::string: return Value(json.get<std::string>());
    case Type::array: {
      std::vector<Value> items;
      items.reserve(json.size());
      for (const auto& item : json) items.push_back(value_from_json(item));
      return Value::sequence(std::move(items));
    }
    case Type::object: {
      Value map = Value::mapping();
      for (const auto& [k, v] : json.items()) map.as_mapping().set(Value(k), value_from_json(v));
      return map;
    }
    default:
      throw Error("invalid_input", "unsupported JSON value");
  }
}

Binding binding_from_json(const nlohmann::ordered_json& object) {
  if (!object.is_object()) throw Error("invalid_input", "input binding must be a JSON object");
  Binding binding;
  for (const auto& [name, value] : object.items()) binding.emplace_back(name, value_from_json(value));
  return binding;
}

std::string repr_binding(const Binding& binding) {
  std::string out = "{";
  for (std::size_t i = 0; i < binding.size(); ++i) {
    if (i != 0) out += ", ";
    out += repr_text(binding[i].first) + ": " + repr_value(binding[i].second);
  }
  return out + "}";
}

}  // namespace tracecot::runtime
