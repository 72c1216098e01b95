#include "tracecot/runtime/interpreter.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "ops.hpp"

namespace tracecot::runtime {

using lang::Node;
using lang::NodeKind;
using namespace detail;

namespace {

struct OutOfBudget {
  std::string detail;
};

enum class Flow { Normal, Break, Continue, Return };

struct Frame {
  const Node* function = nullptr;  // nullptr for the module scope
  int depth = -1;
  bool traced = false;
  int current_line = 0;
  std::vector<std::pair<std::string, Value>> locals;
  std::vector<std::string> shown;  // last rendered repr per local, parallel to locals
  std::vector<bool> rebound;       // assigned since the last flush
  std::uint64_t seen_epoch = 0;
  Value return_value;

  Value* find(std::string_view name) {
    for (auto& [n, v] : locals) {
      if (n == name) return &v;
    }
    return nullptr;
  }
};

class Interpreter {
 public:
  Interpreter(const lang::SourceProgram& program, const ExecutionLimits& limits)
      : program_(program), limits_(limits), ctx_{limits_, epoch_} {
    for (const auto& child : program.ast_root().children) {
      if (child->kind == NodeKind::FunctionDef) functions_.emplace(child->text, child.get());
    }
  }

  ExecutionResult run(const Binding& input) {
    const Node* entry = program_.entry_function();
    if (entry == nullptr) {
      throw Error("missing_entry", "no function named '" + std::string(lang::kEntryName) + "'");
    }
    check_input(*entry, input);
    started_ = std::chrono::steady_clock::now();

    ExecutionResult result;
    try {
      init_module();
      Kwargs kwargs(input.begin(), input.end());
      Value value = call_function(*entry, {}, kwargs, module_);
      trace_.outcome = Completed{repr_value(value)};
      result.value = std::move(value);
    } catch (const Fault& fault) {
      trace_.outcome = RuntimeFailure{fault.message};
    } catch (const OutOfBudget& budget) {
      trace_.outcome = BudgetExceeded{budget.detail};
    }
    result.trace = std::move(trace_);
    return result;
  }

 private:
  static void check_input(const Node& entry, const Binding& input) {
    std::vector<std::string> params;
    for (const auto& child : entry.children) {
      if (child->kind != NodeKind::Param) continue;
      params.push_back(child->text);
      bool required = child->children.empty();
      bool supplied = std::any_of(input.begin(), input.end(),
                                  [&](const auto& kv) { return kv.first == child->text; });
      if (required && !supplied) {
        throw Error("input_mismatch", "missing input for parameter '" + child->text + "'");
      }
    }
    for (const auto& [name, value] : input) {
      if (std::find(params.begin(), params.end(), name) == params.end()) {
        throw Error("input_mismatch", "unexpected input '" + name + "'");
      }
    }
  }

  // Top-level assignments become globals; they run untraced, before the entry call.
  void init_module() {
    for (const auto& child : program_.ast_root().children) {
      if (child->kind == NodeKind::Assign) exec_statement(module_, *child);
    }
    // Defaults are evaluated once, at definition time.
    for (const auto& [name, fn] : functions_) {
      for (const auto& param : fn->children) {
        if (param->kind == NodeKind::Param && !param->children.empty()) {
          defaults_[param.get()] = eval(module_, *param->children.front());
        }
      }
    }
  }

  // ---- tracing ----

  void emit_line(Frame& frame, int line) {
    frame.current_line = line;
    if (!frame.traced) return;
    if (trace_.step_count + 1 > limits_.max_steps) {
      throw OutOfBudget{"step budget of " + std::to_string(limits_.max_steps) + " lines exhausted"};
    }
    ++trace_.step_count;
    if (limits_.wall_clock_limit.count() > 0 && trace_.step_count % 256 == 0 &&
        std::chrono::steady_clock::now() - started_ > limits_.wall_clock_limit) {
      throw OutOfBudget{"wall-clock limit of " + std::to_string(limits_.wall_clock_limit.count()) +
                        " ms exceeded"};
    }
    trace_.events.emplace_back(LineEvent{program_.display_line(line),
                                         std::string(program_.line_text(line)), frame.depth});
  }

  // One VarUpdateEvent per local whose rendering changed since it was last shown.
  void flush_updates(Frame& frame) {
    bool epoch_changed = frame.seen_epoch != epoch_;
    bool any_rebound = std::find(frame.rebound.begin(), frame.rebound.end(), true) != frame.rebound.end();
    if (!frame.traced || (!epoch_changed && !any_rebound)) {
      std::fill(frame.rebound.begin(), frame.rebound.end(), false);
      frame.seen_epoch = epoch_;
      return;
    }
    for (std::size_t i = 0; i < frame.locals.size(); ++i) {
      if (!epoch_changed && !frame.rebound[i]) continue;
      std::string repr = repr_value(frame.locals[i].second);
      if (frame.shown[i] != repr) {
        trace_.events.emplace_back(VarUpdateEvent{frame.locals[i].first, repr, frame.depth});
        frame.shown[i] = std::move(repr);
      }
      frame.rebound[i] = false;
    }
    frame.seen_epoch = epoch_;
  }

  void assign(Frame& frame, const std::string& name, Value value) {
    for (std::size_t i = 0; i < frame.locals.size(); ++i) {
      if (frame.locals[i].first == name) {
        frame.locals[i].second = std::move(value);
        frame.rebound[i] = true;
        return;
      }
    }
    frame.locals.emplace_back(name, std::move(value));
    // A sentinel that no repr can equal, so a new local is always reported.
    frame.shown.emplace_back("\x01");
    frame.rebound.push_back(true);
  }

  // ---- calls ----

  Value call_function(const Node& fn, std::vector<Value> positional, const Kwargs& kwargs,
                      Frame& caller) {
    std::vector<const Node*> params;
    for (const auto& child : fn.children) {
      if (child->kind == NodeKind::Param) params.push_back(child.get());
    }
    const Node& body = *fn.children.back();

    if (positional.size() > params.size()) {
      raise("TypeError", fn.text + "() takes " + std::to_string(params.size()) +
                             " positional argument(s) but " + std::to_string(positional.size()) +
                             " were given");
    }
    std::vector<std::optional<Value>> slots(params.size());
    for (std::size_t i = 0; i < positional.size(); ++i) slots[i] = std::move(positional[i]);
    for (const auto& [name, value] : kwargs) {
      auto it = std::find_if(params.begin(), params.end(),
                             [&](const Node* p) { return p->text == name; });
      if (it == params.end()) {
        raise("TypeError", fn.text + "() got an unexpected keyword argument '" + name + "'");
      }
      auto& slot = slots[static_cast<std::size_t>(it - params.begin())];
      if (slot) raise("TypeError", fn.text + "() got multiple values for argument '" + name + "'");
      slot = value;
    }

    Frame frame;
    frame.function = &fn;
    frame.depth = caller.depth + 1;
    frame.traced = true;
    frame.seen_epoch = epoch_;
    if (static_cast<std::size_t>(frame.depth) + 1 > limits_.max_call_depth) {
      throw OutOfBudget{"call depth limit of " + std::to_string(limits_.max_call_depth) +
                        " exceeded"};
    }

    CallEvent call{fn.text, {}, frame.depth};
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!slots[i]) {
        auto it = defaults_.find(params[i]);
        if (it == defaults_.end()) {
          raise("TypeError", fn.text + "() missing required argument: '" + params[i]->text + "'");
        }
        slots[i] = it->second;
      }
      std::string repr = repr_value(*slots[i]);
      call.args.emplace_back(params[i]->text, repr);
      frame.locals.emplace_back(params[i]->text, std::move(*slots[i]));
      frame.shown.push_back(std::move(repr));
      frame.rebound.push_back(false);
    }
    trace_.events.emplace_back(std::move(call));
    emit_line(frame, fn.line);

    Flow flow = exec_block(frame, body);
    Value result = flow == Flow::Return ? std::move(frame.return_value) : Value();
    trace_.events.emplace_back(ReturnEvent{fn.text, repr_value(result), frame.depth});

    // Control is back on the caller's line.
    if (caller.traced) emit_line(caller, caller.current_line);
    return result;
  }

  // ---- statements ----

  Flow exec_block(Frame& frame, const Node& block) {
    for (const auto& stmt : block.children) {
      Flow flow = exec_statement(frame, *stmt);
      if (flow != Flow::Normal) return flow;
    }
    return Flow::Normal;
  }

  Flow exec_statement(Frame& frame, const Node& stmt) {
    switch (stmt.kind) {
      case NodeKind::Assign: {
        emit_line(frame, stmt.line);
        Value value = eval(frame, *stmt.children.back());
        for (std::size_t i = 0; i + 1 < stmt.children.size(); ++i) {
          assign_target(frame, *stmt.children[i], value);
        }
        flush_updates(frame);
        return Flow::Normal;
      }
      case NodeKind::AugAssign:
        emit_line(frame, stmt.line);
        exec_aug_assign(frame, stmt);
        flush_updates(frame);
        return Flow::Normal;
      case NodeKind::ExprStmt:
        emit_line(frame, stmt.line);
        eval(frame, *stmt.children.front());
        flush_updates(frame);
        return Flow::Normal;
      case NodeKind::Pass:
        emit_line(frame, stmt.line);
        return Flow::Normal;
      case NodeKind::Break:
        emit_line(frame, stmt.line);
        return Flow::Break;
      case NodeKind::Continue:
        emit_line(frame, stmt.line);
        return Flow::Continue;
      case NodeKind::Return:
        emit_line(frame, stmt.line);
        frame.return_value = stmt.children.empty() ? Value() : eval(frame, *stmt.children.front());
        return Flow::Return;
      case NodeKind::If:
        return exec_if(frame, stmt);
      case NodeKind::While:
        return exec_while(frame, stmt);
      case NodeKind::For:
        return exec_for(frame, stmt);
      case NodeKind::FunctionDef:
      case NodeKind::Import:
        raise("SyntaxError", "'" + std::string(lang::to_string(stmt.kind)) +
                                 "' is not allowed inside a function");
      default:
        raise("SyntaxError", "unexpected statement '" + std::string(lang::to_string(stmt.kind)) + "'");
    }
  }

  Flow exec_if(Frame& frame, const Node& stmt) {
    emit_line(frame, stmt.line);
    bool taken = truthy(eval(frame, *stmt.children[0]));
    flush_updates(frame);
    if (taken) return exec_block(frame, *stmt.children[1]);
    if (stmt.children.size() < 3) return Flow::Normal;
    const Node& orelse = *stmt.children[2];
    // `else:` has no line of its own in the trace; `elif` does.
    if (orelse.kind == NodeKind::If) return exec_if(frame, orelse);
    return exec_block(frame, orelse);
  }

  Flow exec_while(Frame& frame, const Node& stmt) {
    while (true) {
      emit_line(frame, stmt.line);
      bool go = truthy(eval(frame, *stmt.children[0]));
      flush_updates(frame);
      if (!go) return Flow::Normal;
      Flow flow = exec_block(frame, *stmt.children[1]);
      if (flow == Flow::Break) return Flow::Normal;
      if (flow == Flow::Return) return flow;
    }
  }

  // The header line is shown once per iteration plus once for the exhausted check.
  Flow exec_for(Frame& frame, const Node& stmt) {
    emit_line(frame, stmt.line);
    Value iterable = eval(frame, *stmt.children[1]);
    // Sequences are walked live so appends during the loop are seen.
    std::vector<Value> snapshot;
    bool live = iterable.is(Tag::Sequence);
    if (!live) snapshot = iterate(iterable);
    for (std::size_t i = 0;; ++i) {
      if (i > 0) emit_line(frame, stmt.line);
      std::size_t size = live ? iterable.as_sequence().size() : snapshot.size();
      if (i >= size) {
        flush_updates(frame);
        return Flow::Normal;
      }
      Value item = live ? iterable.as_sequence()[i] : snapshot[i];
      assign_target(frame, *stmt.children[0], std::move(item));
      flush_updates(frame);
      Flow flow = exec_block(frame, *stmt.children[2]);
      if (flow == Flow::Break) return Flow::Normal;
      if (flow == Flow::Return) return flow;
    }
  }

  void exec_aug_assign(Frame& frame, const Node& stmt) {
    const Node& target = *stmt.children[0];
    const std::string& op = stmt.text;
    if (target.kind == NodeKind::Name) {
      Value current = lookup(frame, target.text);
      Value rhs = eval(frame, *stmt.children[1]);
      if (op == "+" && current.is(Tag::Sequence)) {
        // In-place extend keeps aliases in sync.
        std::vector<Value> extra = iterate(rhs);
        auto& items = current.as_sequence();
        ctx_.check_size(items.size() + extra.size());
        items.insert(items.end(), extra.begin(), extra.end());
        ctx_.mutated();
        assign(frame, target.text, current);
        return;
      }
      assign(frame, target.text, binary_op(op, current, rhs, ctx_));
      return;
    }
    // Index target: container and key evaluated once.
    Value object = eval(frame, *target.children[0]);
    Value key = eval(frame, *target.children[1]);
    Value rhs = eval(frame, *stmt.children[1]);
    Value current = index_value(object, key);
    store_index(object, key, binary_op(op, current, rhs, ctx_), ctx_);
  }

  void assign_target(Frame& frame, const Node& target, Value value) {
    switch (target.kind) {
      case NodeKind::Name:
        assign(frame, target.text, std::move(value));
        return;
      case NodeKind::Index: {
        Value object = eval(frame, *target.children[0]);
        Value key = eval(frame, *target.children[1]);
        store_index(object, key, std::move(value), ctx_);
        return;
      }
      case NodeKind::TupleLit:
      case NodeKind::ListLit: {
        std::vector<Value> items = iterate(value);
        std::size_t expected = target.children.size();
        if (items.size() < expected) {
          raise("ValueError", "not enough values to unpack (expected " + std::to_string(expected) +
                                  ", got " + std::to_string(items.size()) + ")");
        }
        if (items.size() > expected) {
          raise("ValueError", "too many values to unpack (expected " + std::to_string(expected) + ")");
        }
        for (std::size_t i = 0; i < expected; ++i) assign_target(frame, *target.children[i], items[i]);
        return;
      }
      default:
        raise("SyntaxError", "cannot assign to " + std::string(lang::to_string(target.kind)));
    }
  }

  // ---- expressions ----

  Value lookup(Frame& frame, const std::string& name) {
    if (Value* v = frame.find(name)) return *v;
    if (Value* v = module_.find(name)) return *v;
    if (functions_.count(name) != 0) {
      raise("TypeError", "function '" + name + "' cannot be used as a value");
    }
    raise("NameError", "name '" + name + "' is not defined");
  }

  void collect_args(Frame& frame, const Node& call, std::size_t first, std::vector<Value>& positional,
                    Kwargs& kwargs) {
    for (std::size_t i = first; i < call.children.size(); ++i) {
      const Node& arg = *call.children[i];
      if (arg.kind == NodeKind::Keyword) {
        kwargs.emplace_back(arg.text, eval(frame, *arg.children.front()));
      } else {
        positional.push_back(eval(frame, arg));
      }
    }
  }

  Value eval(Frame& frame, const Node& node) {
    switch (node.kind) {
      case NodeKind::IntLit: return Value(node.int_value);
      case NodeKind::FloatLit: return Value(node.float_value);
      case NodeKind::StrLit: return Value(node.text);
      case NodeKind::BoolLit: return Value(node.bool_value);
      case NodeKind::NoneLit: return Value();
      case NodeKind::ListLit:
      case NodeKind::TupleLit: {
        std::vector<Value> items;
        items.reserve(node.children.size());
        for (const auto& child : node.children) items.push_back(eval(frame, *child));
        return node.kind == NodeKind::ListLit ? Value::sequence(std::move(items))
                                              : Value::tuple(std::move(items));
      }
      case NodeKind::DictLit: {
        Value map = Value::mapping();
        for (std::size_t i = 0; i + 1 < node.children.size(); i += 2) {
          Value key = eval(frame, *node.children[i]);
          Value value = eval(frame, *node.children[i + 1]);
          if (!Mapping::key_of(key)) {
            raise("TypeError", "unsupported dict key type: '" + type_name(key) + "'");
          }
          map.as_mapping().set(key, std::move(value));
        }
        return map;
      }
      case NodeKind::Name: return lookup(frame, node.text);
      case NodeKind::BinOp: {
        Value lhs = eval(frame, *node.children[0]);
        Value rhs = eval(frame, *node.children[1]);
        return binary_op(node.text, lhs, rhs, ctx_);
      }
      case NodeKind::UnaryOp: return unary_op(node.text, eval(frame, *node.children[0]));
      case NodeKind::Compare: {
        Value lhs = eval(frame, *node.children[0]);
        for (std::size_t i = 0; i < node.ops.size(); ++i) {
          Value rhs = eval(frame, *node.children[i + 1]);
          if (!compare_op(node.ops[i], lhs, rhs)) return Value(false);
          lhs = std::move(rhs);
        }
        return Value(true);
      }
      case NodeKind::BoolOp: {
        bool is_and = node.text == "and";
        Value last;
        for (const auto& child : node.children) {
          last = eval(frame, *child);
          if (truthy(last) != is_and) return last;
        }
        return last;
      }
      case NodeKind::IfExp:
        return truthy(eval(frame, *node.children[0])) ? eval(frame, *node.children[1])
                                                      : eval(frame, *node.children[2]);
      case NodeKind::Call: {
        std::vector<Value> positional;
        Kwargs kwargs;
        collect_args(frame, node, 0, positional, kwargs);
        if (auto it = functions_.find(node.text); it != functions_.end()) {
          return call_function(*it->second, std::move(positional), kwargs, frame);
        }
        return call_builtin(node.text, std::move(positional), kwargs, ctx_);
      }
      case NodeKind::MethodCall: {
        Value receiver = eval(frame, *node.children[0]);
        std::vector<Value> positional;
        Kwargs kwargs;
        collect_args(frame, node, 1, positional, kwargs);
        return call_method(receiver, node.text, std::move(positional), kwargs, ctx_);
      }
      case NodeKind::Index: {
        Value object = eval(frame, *node.children[0]);
        Value key = eval(frame, *node.children[1]);
        return index_value(object, key);
      }
      case NodeKind::Slice: {
        Value object = eval(frame, *node.children[0]);
        std::optional<Value> parts[3];
        for (int i = 0; i < 3; ++i) {
          const Node& part = *node.children[static_cast<std::size_t>(i) + 1];
          if (part.kind != NodeKind::Empty) parts[i] = eval(frame, part);
        }
        auto ptr = [](const std::optional<Value>& v) { return v ? &*v : nullptr; };
        return slice_value(object, ptr(parts[0]), ptr(parts[1]), ptr(parts[2]));
      }
      default:
        raise("SyntaxError", "unexpected expression '" + std::string(lang::to_string(node.kind)) + "'");
    }
  }

  const lang::SourceProgram& program_;
  ExecutionLimits limits_;
  std::uint64_t epoch_ = 0;
  OpContext ctx_;
  std::map<std::string, const Node*, std::less<>> functions_;
  std::map<const Node*, Value> defaults_;
  Frame module_;
  ExecutionTrace trace_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace

ExecutionResult execute(const lang::SourceProgram& program, const Binding& input,
                        const ExecutionLimits& limits) {
  if (!limits.valid()) throw Error("invalid_limits", "all execution limits must be positive");
  return Interpreter(program, limits).run(input);
}

}  // namespace tracecot::runtime
