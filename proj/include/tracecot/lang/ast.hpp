#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tracecot::lang {

enum class NodeKind {
  // Structure
  Module,
  FunctionDef,
  Param,
  Block,
  // Statements
  Assign,
  AugAssign,
  ExprStmt,
  If,
  While,
  For,
  Return,
  Break,
  Continue,
  Pass,
  Import,
  // Expressions
  IntLit,
  FloatLit,
  StrLit,
  BoolLit,
  NoneLit,
  ListLit,
  TupleLit,
  DictLit,
  Name,
  BinOp,
  UnaryOp,
  Compare,
  BoolOp,
  IfExp,
  Call,
  MethodCall,
  Keyword,
  Index,
  Slice,
  Empty,
};

std::string_view to_string(NodeKind kind);

struct Node;
using NodePtr = std::unique_ptr<Node>;

// Uniform AST node. Which fields are meaningful depends on `kind`:
//   FunctionDef  text = name; children = [Param..., Block]
//   Param        text = name; children = [default]?
//   Assign       children = [target..., value]
//   AugAssign    text = operator without '='; children = [target, value]
//   If           text = "if" | "elif"; children = [cond, Block, (If | Block)?]
//   While        children = [cond, Block]
//   For          children = [target, iterable, Block]
//   Return       children = [value]?
//   Import       text = module; ops = ["from"] for from-imports, whose
//                names are the imported names; plain imports list extra modules
//   BinOp        text = operator; children = [lhs, rhs]
//   UnaryOp      text = "-" | "+" | "not"; children = [operand]
//   Compare      ops = operators; children = [operand...] (ops.size() + 1)
//   BoolOp       text = "and" | "or"; children = [operand...]
//   IfExp        children = [cond, then, else]
//   Call         text = callee name; children = [arg | Keyword ...]
//   MethodCall   text = method; children = [receiver, arg | Keyword ...]
//   Keyword      text = name; children = [value]
//   Index        children = [object, index]
//   Slice        children = [object, lower, upper, step] (Empty when absent)
struct Node {
  NodeKind kind;
  int line = 0;
  std::string text;
  std::int64_t int_value = 0;
  double float_value = 0.0;
  bool bool_value = false;
  std::vector<std::string> ops;
  std::vector<std::string> names;
  std::vector<NodePtr> children;

  Node(NodeKind k, int ln) : kind(k), line(ln) {}
};

}  // namespace tracecot::lang
