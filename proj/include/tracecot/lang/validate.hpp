#pragma once

#include <set>
#include <string>
#include <vector>

#include "tracecot/lang/program.hpp"

namespace tracecot::lang {

// What a program may reference. Defaults cover the builtins and methods the
// runtime implements; corpora with extra needs extend these sets.
struct LanguagePolicy {
  std::set<std::string> banned_modules = default_banned_modules();
  std::set<std::string> builtins = default_builtins();
  std::set<std::string> methods = default_methods();

  static std::set<std::string> default_banned_modules();
  static std::set<std::string> default_builtins();
  static std::set<std::string> default_methods();
};

struct Violation {
  std::string rule_id;
  int line_number;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool accepted() const { return violations.empty(); }
};

// Static checks only; never runs program code. Rule ids:
//   banned_module, unsupported_import, unknown_callable, unknown_method,
//   unsupported_decorator, missing_entry, duplicate_function,
//   nested_function, toplevel_statement
ValidationReport validate(const SourceProgram& program, const LanguagePolicy& policy);

}  // namespace tracecot::lang
