#include "tracecot/lang/validate.hpp"

#include <algorithm>
#include <map>

namespace tracecot::lang {

std::set<std::string> LanguagePolicy::default_banned_modules() {
  return {"random", "secrets", "uuid",   "numpy",      "time",   "datetime",
          "os",     "sys",     "shutil", "subprocess", "socket", "pathlib"};
}

std::set<std::string> LanguagePolicy::default_builtins() {
  return {"len", "str",    "int",    "float", "abs",       "min",         "max",
          "sum", "sorted", "range",  "list",  "enumerate", "permutations"};
}

std::set<std::string> LanguagePolicy::default_methods() {
  return {"join", "split", "upper",  "lower", "strip", "append", "pop",
          "insert", "remove", "index", "get", "keys",  "values", "items"};
}

namespace {

std::string root_module(const std::string& dotted) {
  return dotted.substr(0, dotted.find('.'));
}

class Validator {
 public:
  Validator(const SourceProgram& program, const LanguagePolicy& policy)
      : program_(program), policy_(policy) {}

  ValidationReport run() {
    const Node& root = program_.ast_root();
    collect_bindings(root);

    std::map<std::string, int> seen;
    for (const auto& stmt : root.children) {
      switch (stmt->kind) {
        case NodeKind::FunctionDef:
          if (auto [it, inserted] = seen.emplace(stmt->text, stmt->line); !inserted) {
            add("duplicate_function", stmt->line,
                "function '" + stmt->text + "' is already defined at line " +
                    std::to_string(it->second));
          }
          check_function(*stmt);
          break;
        case NodeKind::Import:
          check_import(*stmt);
          break;
        case NodeKind::Assign:
          walk(*stmt);
          break;
        case NodeKind::ExprStmt:
          if (is_driver_call(*stmt)) break;
          [[fallthrough]];
        default:
          add("toplevel_statement", stmt->line,
              "only function definitions, constants and imports may appear at top level");
      }
    }
    if (program_.entry_function() == nullptr) {
      add("missing_entry", 1, "no top-level function named '" + std::string(kEntryName) + "'");
    }
    return std::move(report_);
  }

  // `main_solution(num=100)` after the definition is a driver line, not program logic.
  static bool is_driver_call(const Node& stmt) {
    const Node& expr = *stmt.children.front();
    return expr.kind == NodeKind::Call && expr.text == kEntryName;
  }

 private:
  void add(std::string rule, int line, std::string message) {
    report_.violations.push_back(Violation{std::move(rule), line, std::move(message)});
  }

  void collect_bindings(const Node& node) {
    switch (node.kind) {
      case NodeKind::FunctionDef:
        functions_.insert(node.text);
        bound_.insert(node.text);
        break;
      case NodeKind::Param:
        bound_.insert(node.text);
        break;
      case NodeKind::Assign:
        for (std::size_t i = 0; i + 1 < node.children.size(); ++i) bind_target(*node.children[i]);
        break;
      case NodeKind::AugAssign:
        bind_target(*node.children[0]);
        break;
      case NodeKind::For:
        bind_target(*node.children[0]);
        break;
      default:
        break;
    }
    for (const auto& child : node.children) collect_bindings(*child);
  }

  void bind_target(const Node& target) {
    if (target.kind == NodeKind::Name) {
      bound_.insert(target.text);
    } else if (target.kind == NodeKind::TupleLit || target.kind == NodeKind::ListLit) {
      for (const auto& child : target.children) bind_target(*child);
    }
  }

  bool is_banned_name(const std::string& name) const {
    return policy_.banned_modules.count(name) != 0 && bound_.count(name) == 0;
  }

  void check_import(const Node& node) {
    std::vector<std::string> modules{node.text};
    bool from_import = !node.ops.empty();
    // permutations is provided natively, so importing it from itertools is a no-op.
    if (from_import && node.text == "itertools" &&
        std::all_of(node.names.begin(), node.names.end(),
                    [&](const std::string& n) { return n == "permutations"; })) {
      return;
    }
    if (!from_import) modules.insert(modules.end(), node.names.begin(), node.names.end());
    for (const auto& module : modules) {
      if (policy_.banned_modules.count(root_module(module)) != 0) {
        add("banned_module", node.line, "import of banned module '" + module + "'");
      } else {
        add("unsupported_import", node.line, "import of '" + module + "' is not supported");
      }
    }
  }

  void check_function(const Node& fn) {
    for (const auto& decorator : fn.names) {
      if (policy_.banned_modules.count(root_module(decorator)) != 0) {
        add("banned_module", fn.line, "decorator from banned module '" + decorator + "'");
      } else {
        add("unsupported_decorator", fn.line, "decorator '@" + decorator + "' is not supported");
      }
    }
    for (const auto& child : fn.children) walk(*child);
  }

  void walk(const Node& node) {
    switch (node.kind) {
      case NodeKind::FunctionDef:
        add("nested_function", node.line,
            "nested function '" + node.text + "' is not supported; define it at top level");
        break;
      case NodeKind::Import:
        check_import(node);
        return;
      case NodeKind::Call:
        if (functions_.count(node.text) == 0 && policy_.builtins.count(node.text) == 0) {
          if (is_banned_name(node.text)) {
            add("banned_module", node.line, "call into banned module '" + node.text + "'");
          } else {
            add("unknown_callable", node.line, "call to unknown function '" + node.text + "'");
          }
        }
        break;
      case NodeKind::MethodCall: {
        const Node& receiver = *node.children.front();
        if (receiver.kind == NodeKind::Name && is_banned_name(receiver.text)) {
          add("banned_module", node.line,
              "use of banned module '" + receiver.text + "." + node.text + "'");
          // the receiver name is already reported; skip the generic name check
          for (std::size_t i = 1; i < node.children.size(); ++i) walk(*node.children[i]);
          return;
        }
        if (policy_.methods.count(node.text) == 0) {
          add("unknown_method", node.line, "method '." + node.text + "' is not supported");
        }
        break;
      }
      case NodeKind::Name:
        if (is_banned_name(node.text)) {
          add("banned_module", node.line, "reference to banned module '" + node.text + "'");
        }
        break;
      default:
        break;
    }
    for (const auto& child : node.children) walk(*child);
  }

  const SourceProgram& program_;
  const LanguagePolicy& policy_;
  std::set<std::string> functions_;
  std::set<std::string> bound_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate(const SourceProgram& program, const LanguagePolicy& policy) {
  return Validator(program, policy).run();
}

}  // namespace tracecot::lang
