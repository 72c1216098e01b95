#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tracecot::runtime {

class Value;

struct NoneValue {
  bool operator==(const NoneValue&) const = default;
};

// Sequences and mappings are shared by reference, like the language they model:
// `b = a; b.append(1)` is visible through `a`.
struct SequenceRef {
  std::shared_ptr<std::vector<Value>> items;
};

struct TupleRef {
  std::shared_ptr<const std::vector<Value>> items;
};

class Mapping;

struct MappingRef {
  std::shared_ptr<Mapping> map;
};

enum class Tag { None, Boolean, Integer, Float, Text, Sequence, Tuple, Mapping };

class Value {
 public:
  using Storage = std::variant<NoneValue, bool, std::int64_t, double, std::string, SequenceRef,
                               TupleRef, MappingRef>;

  Value() : data_(NoneValue{}) {}
  Value(NoneValue) : data_(NoneValue{}) {}
  Value(bool b) : data_(b) {}
  Value(std::int64_t i) : data_(i) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(double d) : data_(d) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}

  static Value sequence(std::vector<Value> items = {});
  static Value tuple(std::vector<Value> items = {});
  static Value mapping();

  Tag tag() const { return static_cast<Tag>(data_.index()); }
  bool is(Tag t) const { return tag() == t; }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  const std::string& as_text() const { return std::get<std::string>(data_); }
  std::vector<Value>& as_sequence() const { return *std::get<SequenceRef>(data_).items; }
  const std::vector<Value>& as_tuple() const { return *std::get<TupleRef>(data_).items; }
  Mapping& as_mapping() const { return *std::get<MappingRef>(data_).map; }

  // Identity of the referenced container (nullptr for scalars).
  const void* identity() const;

  const Storage& storage() const { return data_; }

 private:
  Storage data_;
};

// Insertion-ordered dictionary restricted to Integer and Text keys.
class Mapping {
 public:
  using Key = std::variant<std::int64_t, std::string>;

  // nullopt for values that cannot be keys.
  static std::optional<Key> key_of(const Value& value);

  const Value* find(const Key& key) const;
  // Precondition: key_of(key) has a value.
  void set(const Value& key, Value value);
  bool erase(const Key& key);
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<Value, Value>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<Value, Value>> entries_;
  std::map<Key, std::size_t> index_;
};

std::string_view tag_name(Tag tag);

// Canonical rendering used everywhere a value is shown: trace arguments,
// variable updates, return values and dataset outputs.
std::string repr_value(const Value& value);

// Shortest round-trip decimal, formatted with the scripting language's rules
// ("1.0", "0.1", "1e+16", "1e-05", "inf", "nan").
std::string repr_float(double value);

// Single-quoted with backslash escapes.
std::string repr_text(std::string_view text);

// Structural equality with numeric cross-type comparison (1 == 1.0 == True).
bool values_equal(const Value& a, const Value& b);

// Named entry-function arguments, in the order they were supplied.
using Binding = std::vector<std::pair<std::string, Value>>;

// JSON object -> Binding. Integers must fit in 64 bits; arrays become
// Sequences and objects become Mappings with Text keys.
Binding binding_from_json(const nlohmann::ordered_json& object);
Value value_from_json(const nlohmann::ordered_json& json);

// "{'n': 17, 'k': 3}" style rendering of a binding.
std::string repr_binding(const Binding& binding);

}  // namespace tracecot::runtime
