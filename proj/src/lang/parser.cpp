#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracecot/lang/program.hpp"

namespace tracecot::lang {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Module: return "Module";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::Param: return "Param";
    case NodeKind::Block: return "Block";
    case NodeKind::Assign: return "Assign";
    case NodeKind::AugAssign: return "AugAssign";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::For: return "For";
    case NodeKind::Return: return "Return";
    case NodeKind::Break: return "Break";
    case NodeKind::Continue: return "Continue";
    case NodeKind::Pass: return "Pass";
    case NodeKind::Import: return "Import";
    case NodeKind::IntLit: return "IntLit";
    case NodeKind::FloatLit: return "FloatLit";
    case NodeKind::StrLit: return "StrLit";
    case NodeKind::BoolLit: return "BoolLit";
    case NodeKind::NoneLit: return "NoneLit";
    case NodeKind::ListLit: return "ListLit";
    case NodeKind::TupleLit: return "TupleLit";
    case NodeKind::DictLit: return "DictLit";
    case NodeKind::Name: return "Name";
    case NodeKind::BinOp: return "BinOp";
    case NodeKind::UnaryOp: return "UnaryOp";
    case NodeKind::Compare: return "Compare";
    case NodeKind::BoolOp: return "BoolOp";
    case NodeKind::IfExp: return "IfExp";
    case NodeKind::Call: return "Call";
    case NodeKind::MethodCall: return "MethodCall";
    case NodeKind::Keyword: return "Keyword";
    case NodeKind::Index: return "Index";
    case NodeKind::Slice: return "Slice";
    case NodeKind::Empty: return "Empty";
  }
  return "?";
}

namespace {

enum class Tok { Name, Keyword, Int, Float, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
  std::int64_t int_value = 0;
  double float_value = 0.0;
};

constexpr std::array<std::string_view, 35> kKeywords = {
    "and",    "or",     "not",    "if",     "elif",  "else",     "while",
    "for",    "in",     "def",    "return", "break", "continue", "pass",
    "True",   "False",  "None",   "import", "from",  "as",       "is",
    "lambda", "class",  "try",    "except", "finally", "with",   "yield",
    "global", "nonlocal", "del",  "raise",  "assert", "async",   "await"};

// Longest operators first so the greedy scan picks them.
constexpr std::array<std::string_view, 37> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "**", "//", "==", "!=", "<=",
    ">=",  "+=",  "-=",  "*=",  "/=",  "%=", "->", "<<", ">>", "+",
    "-",   "*",   "/",   "%",   "<",   ">",  "=",  "(",  ")",  "[",
    "]",   "{",   "}",   ",",   ":",   ".",  "@"};

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && paren_depth_ == 0) {
        if (handle_indentation()) continue;
      }
      char c = src_[pos_];
      if (c == '\n') {
        if (paren_depth_ == 0 && !tokens_.empty() && tokens_.back().kind != Tok::Newline) {
          push(Tok::Newline, "\\n", col());
        }
        advance_line();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
        pos_ += 2;
        ++line_;
        line_start_ = pos_;
        continue;
      }
      if (is_ident_start(c)) {
        if (lex_string_prefix()) continue;
        lex_name();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (c == '\'' || c == '"') {
        lex_string(false);
        continue;
      }
      lex_operator();
    }
    if (!tokens_.empty() && tokens_.back().kind != Tok::Newline) {
      push(Tok::Newline, "\\n", col());
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(Tok::Dedent, "", 1);
    }
    push(Tok::End, "", 1);
    return std::move(tokens_);
  }

 private:
  int col() const { return static_cast<int>(pos_ - line_start_) + 1; }

  void push(Tok kind, std::string text, int column) {
    tokens_.push_back(Token{kind, std::move(text), line_, column});
  }

  void advance_line() {
    ++pos_;
    ++line_;
    line_start_ = pos_;
    at_line_start_ = paren_depth_ == 0;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_, col(), message);
  }

  // Returns true when the line was blank/comment-only and consumed.
  bool handle_indentation() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      ++p;
    }
    if (p < src_.size() && src_[p] == '\r') ++p;
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
      while (p < src_.size() && src_[p] != '\n') ++p;
      pos_ = p;
      if (pos_ < src_.size()) {
        advance_line();
      }
      return true;
    }
    pos_ = p;
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      push(Tok::Indent, "", col());
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        push(Tok::Dedent, "", col());
      }
      if (width != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    return false;
  }

  void lex_name() {
    int start_col = col();
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    std::string word(src_.substr(start, pos_ - start));
    Tok kind = is_keyword(word) ? Tok::Keyword : Tok::Name;
    push(kind, std::move(word), start_col);
  }

  bool lex_string_prefix() {
    std::size_t p = pos_;
    std::string prefix;
    while (p < src_.size() && std::isalpha(static_cast<unsigned char>(src_[p])) &&
           prefix.size() < 2) {
      prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src_[p]))));
      ++p;
    }
    if (p >= src_.size() || (src_[p] != '\'' && src_[p] != '"')) return false;
    if (prefix == "r") {
      pos_ = p;
      lex_string(true);
      return true;
    }
    if (prefix.find('f') != std::string::npos) fail("string formatting expressions are not supported");
    if (prefix.find('b') != std::string::npos) fail("byte strings are not supported");
    if (prefix == "u") {
      pos_ = p;
      lex_string(false);
      return true;
    }
    return false;
  }

  void lex_string(bool raw) {
    int start_col = col();
    int start_line = line_;
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    std::string value;
    while (true) {
      if (pos_ >= src_.size()) throw ParseError(start_line, start_col, "unterminated string literal");
      char c = src_[pos_];
      if (triple) {
        if (c == quote && pos_ + 2 < src_.size() && src_[pos_ + 1] == quote &&
            src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      } else if (c == quote) {
        ++pos_;
        break;
      }
      if (c == '\n') {
        if (!triple) throw ParseError(start_line, start_col, "unterminated string literal");
        value.push_back('\n');
        ++pos_;
        ++line_;
        line_start_ = pos_;
        continue;
      }
      if (c == '\\' && !raw && pos_ + 1 < src_.size()) {
        char e = src_[pos_ + 1];
        pos_ += 2;
        switch (e) {
          case 'n': value.push_back('\n'); break;
          case 't': value.push_back('\t'); break;
          case 'r': value.push_back('\r'); break;
          case '0': value.push_back('\0'); break;
          case '\\': value.push_back('\\'); break;
          case '\'': value.push_back('\''); break;
          case '"': value.push_back('"'); break;
          case '\n':
            ++line_;
            line_start_ = pos_;
            break;
          default:
            value.push_back('\\');
            value.push_back(e);
        }
        continue;
      }
      value.push_back(c);
      ++pos_;
    }
    Token tok{Tok::String, std::move(value), start_line, start_col};
    tokens_.push_back(std::move(tok));
  }

  void lex_number() {
    int start_col = col();
    std::size_t start = pos_;
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(src_[pos_]) || src_[pos_] == '_')) ++pos_;
    };
    auto is_dec = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      char radix_char = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])));
      int base = radix_char == 'x' ? 16 : radix_char == 'o' ? 8 : 2;
      pos_ += 2;
      digits([](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
      std::string body;
      for (char c : src_.substr(start + 2, pos_ - start - 2)) {
        if (c != '_') body.push_back(c);
      }
      Token tok{Tok::Int, std::string(src_.substr(start, pos_ - start)), line_, start_col};
      auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), tok.int_value, base);
      if (ec != std::errc() || ptr != body.data() + body.size() || body.empty()) {
        fail("invalid integer literal '" + tok.text + "'");
      }
      tokens_.push_back(std::move(tok));
      return;
    }
    bool is_float = false;
    digits(is_dec);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      ++pos_;
      digits(is_dec);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && is_dec(src_[pos_])) {
        is_float = true;
        digits(is_dec);
      } else {
        pos_ = save;
      }
    }
    if (pos_ < src_.size() && is_ident_start(src_[pos_])) fail("invalid numeric literal");
    std::string text(src_.substr(start, pos_ - start));
    std::string clean;
    for (char c : text) {
      if (c != '_') clean.push_back(c);
    }
    Token tok{is_float ? Tok::Float : Tok::Int, text, line_, start_col};
    if (is_float) {
      auto [ptr, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), tok.float_value);
      if (ec == std::errc::result_out_of_range) {
        tok.float_value = std::stod(clean);
      } else if (ec != std::errc()) {
        fail("invalid float literal '" + text + "'");
      }
    } else {
      auto [ptr, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), tok.int_value);
      if (ec == std::errc::result_out_of_range) fail("integer literal '" + text + "' exceeds 64 bits");
      if (ec != std::errc()) fail("invalid integer literal '" + text + "'");
    }
    tokens_.push_back(std::move(tok));
  }

  void lex_operator() {
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        int start_col = col();
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") ++paren_depth_;
        if ((op == ")" || op == "]" || op == "}") && paren_depth_ > 0) --paren_depth_;
        push(Tok::Op, std::string(op), start_col);
        return;
      }
    }
    if (src_[pos_] == ';') {
      push(Tok::Op, ";", col());
      ++pos_;
      return;
    }
    fail(std::string("unexpected character '") + src_[pos_] + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  int paren_depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

bool is_aug_op(std::string_view op) {
  return op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "//=" ||
         op == "%=" || op == "**=";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  NodePtr parse_module() {
    auto module = std::make_unique<Node>(NodeKind::Module, 1);
    while (!at(Tok::End)) {
      if (accept(Tok::Newline)) continue;
      if (auto stmt = parse_statement()) module->children.push_back(std::move(stmt));
    }
    return module;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
  bool at_kw(std::string_view kw) const { return peek().kind == Tok::Keyword && peek().text == kw; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok kind) {
    if (!at(kind)) return false;
    ++pos_;
    return true;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail_at(const Token& tok, const std::string& message) const {
    throw ParseError(tok.line, tok.column, message);
  }

  static std::string describe(const Token& tok) {
    switch (tok.kind) {
      case Tok::Newline: return "end of line";
      case Tok::Indent: return "indent";
      case Tok::Dedent: return "dedent";
      case Tok::End: return "end of input";
      case Tok::String: return "string literal";
      default: return "'" + tok.text + "'";
    }
  }

  [[noreturn]] void expected(const std::string& what) const {
    fail_at(peek(), "expected " + what + ", found " + describe(peek()));
  }

  void expect_op(std::string_view op) {
    if (!accept_op(op)) expected("'" + std::string(op) + "'");
  }
  void expect(Tok kind, const std::string& what) {
    if (!accept(kind)) expected(what);
  }
  std::string expect_name() {
    if (!at(Tok::Name)) expected("identifier");
    return take().text;
  }

  NodePtr parse_statement() {
    const Token& tok = peek();
    if (tok.kind == Tok::Indent) fail_at(tok, "unexpected indent");
    if (at_op("@")) return parse_decorated();
    if (tok.kind == Tok::Keyword) {
      if (tok.text == "def") return parse_funcdef();
      if (tok.text == "if") return parse_if("if");
      if (tok.text == "while") return parse_while();
      if (tok.text == "for") return parse_for();
      if (tok.text == "elif" || tok.text == "else") fail_at(tok, "'" + tok.text + "' without matching 'if'");
      static constexpr std::array<std::string_view, 13> kUnsupported = {
          "class", "try",    "except", "finally", "with",  "yield", "global",
          "nonlocal", "del", "raise",  "assert",  "async", "lambda"};
      if (std::find(kUnsupported.begin(), kUnsupported.end(), tok.text) != kUnsupported.end()) {
        fail_at(tok, "unsupported statement '" + tok.text + "'");
      }
    }
    return parse_simple_statements();
  }

  // Decorators other than @snoop are kept in `names` so validation can report them.
  NodePtr parse_decorated() {
    std::vector<std::string> decorators;
    while (accept_op("@")) {
      std::string name = expect_name();
      while (accept_op(".")) name += "." + expect_name();
      if (at_op("(")) {
        int depth = 0;
        do {
          if (at(Tok::End)) expected("')'");
          if (at_op("(")) ++depth;
          if (at_op(")")) --depth;
          take();
        } while (depth > 0);
      }
      expect(Tok::Newline, "end of line after decorator");
      if (name != "snoop" && name != "snoop.snoop") decorators.push_back(name);
    }
    if (!at_kw("def")) expected("'def' after decorator");
    auto fn = parse_funcdef();
    fn->names = std::move(decorators);
    return fn;
  }

  NodePtr parse_funcdef() {
    Token def = take();
    auto fn = std::make_unique<Node>(NodeKind::FunctionDef, def.line);
    fn->text = expect_name();
    expect_op("(");
    bool seen_default = false;
    while (!at_op(")")) {
      if (at_op("*") || at_op("**")) fail_at(peek(), "variadic parameters are not supported");
      Token name_tok = peek();
      auto param = std::make_unique<Node>(NodeKind::Param, name_tok.line);
      param->text = expect_name();
      if (accept_op(":")) parse_test();  // annotation, ignored
      if (accept_op("=")) {
        param->children.push_back(parse_test());
        seen_default = true;
      } else if (seen_default) {
        fail_at(name_tok, "non-default parameter follows default parameter");
      }
      for (const auto& other : fn->children) {
        if (other->text == param->text) fail_at(name_tok, "duplicate parameter '" + param->text + "'");
      }
      fn->children.push_back(std::move(param));
      if (!accept_op(",")) break;
    }
    expect_op(")");
    if (accept_op("->")) parse_test();
    expect_op(":");
    fn->children.push_back(parse_block());
    return fn;
  }

  NodePtr parse_block() {
    auto block = std::make_unique<Node>(NodeKind::Block, peek().line);
    if (accept(Tok::Newline)) {
      expect(Tok::Indent, "an indented block");
      while (!accept(Tok::Dedent)) {
        if (at(Tok::End)) break;
        if (accept(Tok::Newline)) continue;
        block->children.push_back(parse_statement());
      }
    } else {
      auto simple = parse_simple_statements();
      block->line = simple->line;
      block->children.push_back(std::move(simple));
    }
    if (block->children.empty()) expected("an indented block");
    flatten_simple(*block);
    return block;
  }

  // parse_simple_statements wraps `a; b` in a Block; splice those into the parent.
  static void flatten_simple(Node& block) {
    std::vector<NodePtr> flat;
    for (auto& child : block.children) {
      if (child->kind == NodeKind::Block) {
        for (auto& inner : child->children) flat.push_back(std::move(inner));
      } else {
        flat.push_back(std::move(child));
      }
    }
    block.children = std::move(flat);
  }

  NodePtr parse_if(std::string_view keyword) {
    Token kw = take();
    auto node = std::make_unique<Node>(NodeKind::If, kw.line);
    node->text = std::string(keyword);
    node->children.push_back(parse_test());
    expect_op(":");
    node->children.push_back(parse_block());
    if (at_kw("elif")) {
      node->children.push_back(parse_if("elif"));
    } else if (accept_kw("else")) {
      expect_op(":");
      node->children.push_back(parse_block());
    }
    return node;
  }

  NodePtr parse_while() {
    Token kw = take();
    auto node = std::make_unique<Node>(NodeKind::While, kw.line);
    node->children.push_back(parse_test());
    expect_op(":");
    node->children.push_back(parse_block());
    if (at_kw("else")) fail_at(peek(), "loop 'else' clauses are not supported");
    return node;
  }

  NodePtr parse_for() {
    Token kw = take();
    auto node = std::make_unique<Node>(NodeKind::For, kw.line);
    auto target = parse_target_list();
    check_target(*target, false);
    node->children.push_back(std::move(target));
    if (!accept_kw("in")) expected("'in'");
    node->children.push_back(parse_testlist());
    expect_op(":");
    node->children.push_back(parse_block());
    if (at_kw("else")) fail_at(peek(), "loop 'else' clauses are not supported");
    return node;
  }

  // Targets of a for-loop: expr (',' expr)* without consuming 'in'.
  NodePtr parse_target_list() {
    int line = peek().line;
    auto first = parse_expr();
    if (!at_op(",")) return first;
    auto tuple = std::make_unique<Node>(NodeKind::TupleLit, line);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_kw("in")) break;
      tuple->children.push_back(parse_expr());
    }
    return tuple;
  }

  NodePtr parse_simple_statements() {
    int line = peek().line;
    std::vector<NodePtr> stmts;
    stmts.push_back(parse_small_statement());
    while (accept_op(";")) {
      if (at(Tok::Newline)) break;
      stmts.push_back(parse_small_statement());
    }
    expect(Tok::Newline, "end of line");
    if (stmts.size() == 1) return std::move(stmts.front());
    auto block = std::make_unique<Node>(NodeKind::Block, line);
    block->children = std::move(stmts);
    return block;
  }

  NodePtr parse_small_statement() {
    const Token& tok = peek();
    if (tok.kind == Tok::Keyword) {
      if (tok.text == "pass") return std::make_unique<Node>(NodeKind::Pass, take().line);
      if (tok.text == "break") return std::make_unique<Node>(NodeKind::Break, take().line);
      if (tok.text == "continue") return std::make_unique<Node>(NodeKind::Continue, take().line);
      if (tok.text == "return") {
        auto node = std::make_unique<Node>(NodeKind::Return, take().line);
        if (!at(Tok::Newline) && !at_op(";")) node->children.push_back(parse_testlist());
        return node;
      }
      if (tok.text == "import") return parse_import();
      if (tok.text == "from") return parse_from_import();
    }
    int line = tok.line;
    auto first = parse_testlist();
    if (at(Tok::Op) && is_aug_op(peek().text)) {
      Token op = take();
      check_target(*first, true);
      auto node = std::make_unique<Node>(NodeKind::AugAssign, line);
      node->text = op.text.substr(0, op.text.size() - 1);
      node->children.push_back(std::move(first));
      node->children.push_back(parse_testlist());
      return node;
    }
    if (at_op(":")) fail_at(peek(), "annotated assignments are not supported");
    if (!at_op("=")) {
      auto node = std::make_unique<Node>(NodeKind::ExprStmt, line);
      node->children.push_back(std::move(first));
      return node;
    }
    auto node = std::make_unique<Node>(NodeKind::Assign, line);
    node->children.push_back(std::move(first));
    while (accept_op("=")) node->children.push_back(parse_testlist());
    for (std::size_t i = 0; i + 1 < node->children.size(); ++i) check_target(*node->children[i], false);
    return node;
  }

  void check_target(const Node& target, bool augmented) const {
    switch (target.kind) {
      case NodeKind::Name:
      case NodeKind::Index:
        return;
      case NodeKind::TupleLit:
      case NodeKind::ListLit:
        if (augmented) break;
        for (const auto& child : target.children) check_target(*child, false);
        return;
      default:
        break;
    }
    throw ParseError(target.line, 1, "cannot assign to " + std::string(to_string(target.kind)));
  }

  NodePtr parse_import() {
    Token kw = take();
    auto node = std::make_unique<Node>(NodeKind::Import, kw.line);
    node->text = parse_dotted_name();
    if (accept_kw("as")) expect_name();
    while (accept_op(",")) {
      // `import a, b` keeps the first module; extra modules become names
      node->names.push_back(parse_dotted_name());
      if (accept_kw("as")) expect_name();
    }
    return node;
  }

  NodePtr parse_from_import() {
    Token kw = take();
    auto node = std::make_unique<Node>(NodeKind::Import, kw.line);
    node->text = parse_dotted_name();
    node->ops.push_back("from");
    if (!accept_kw("import")) expected("'import'");
    bool paren = accept_op("(");
    if (accept_op("*")) {
      node->names.push_back("*");
    } else {
      do {
        if (paren && at_op(")")) break;
        node->names.push_back(expect_name());
        if (accept_kw("as")) expect_name();
      } while (accept_op(","));
    }
    if (paren) expect_op(")");
    if (node->names.empty()) node->names.push_back("*");
    return node;
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  // testlist: test (',' test)* [','] -> bare tuples become TupleLit
  NodePtr parse_testlist() {
    int line = peek().line;
    auto first = parse_test();
    if (!at_op(",")) return first;
    auto tuple = std::make_unique<Node>(NodeKind::TupleLit, line);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (ends_testlist()) break;
      tuple->children.push_back(parse_test());
    }
    return tuple;
  }

  bool ends_testlist() const {
    return at(Tok::Newline) || at_op("=") || at_op(")") || at_op(";") || at_op(":") ||
           (at(Tok::Op) && is_aug_op(peek().text));
  }

  NodePtr parse_test() {
    if (at_kw("lambda")) fail_at(peek(), "lambda expressions are not supported");
    int line = peek().line;
    auto value = parse_or();
    if (!accept_kw("if")) return value;
    auto node = std::make_unique<Node>(NodeKind::IfExp, line);
    auto cond = parse_or();
    if (!accept_kw("else")) expected("'else' in conditional expression");
    node->children.push_back(std::move(cond));
    node->children.push_back(std::move(value));
    node->children.push_back(parse_test());
    return node;
  }

  NodePtr parse_bool_chain(std::string_view op, NodePtr (Parser::*next)()) {
    int line = peek().line;
    auto first = (this->*next)();
    if (!at_kw(op)) return first;
    auto node = std::make_unique<Node>(NodeKind::BoolOp, line);
    node->text = std::string(op);
    node->children.push_back(std::move(first));
    while (accept_kw(op)) node->children.push_back((this->*next)());
    return node;
  }

  NodePtr parse_or() { return parse_bool_chain("or", &Parser::parse_and); }
  NodePtr parse_and() { return parse_bool_chain("and", &Parser::parse_not); }

  NodePtr parse_not() {
    if (at_kw("not")) {
      Token kw = take();
      auto node = std::make_unique<Node>(NodeKind::UnaryOp, kw.line);
      node->text = "not";
      node->children.push_back(parse_not());
      return node;
    }
    return parse_comparison();
  }

  std::optional<std::string> comparison_op() {
    if (at(Tok::Op)) {
      const std::string& t = peek().text;
      if (t == "<" || t == ">" || t == "==" || t == ">=" || t == "<=" || t == "!=") {
        take();
        return t;
      }
      return std::nullopt;
    }
    if (at_kw("in")) {
      take();
      return "in";
    }
    if (at_kw("not") && peek(1).kind == Tok::Keyword && peek(1).text == "in") {
      pos_ += 2;
      return "not in";
    }
    if (at_kw("is")) {
      take();
      if (accept_kw("not")) return "is not";
      return "is";
    }
    return std::nullopt;
  }

  NodePtr parse_comparison() {
    int line = peek().line;
    auto first = parse_expr();
    auto op = comparison_op();
    if (!op) return first;
    auto node = std::make_unique<Node>(NodeKind::Compare, line);
    node->children.push_back(std::move(first));
    while (op) {
      node->ops.push_back(*op);
      node->children.push_back(parse_expr());
      op = comparison_op();
    }
    return node;
  }

  NodePtr binary(int line, std::string op, NodePtr lhs, NodePtr rhs) {
    auto node = std::make_unique<Node>(NodeKind::BinOp, line);
    node->text = std::move(op);
    node->children.push_back(std::move(lhs));
    node->children.push_back(std::move(rhs));
    return node;
  }

  NodePtr parse_expr() {
    auto lhs = parse_arith();
    if (at_op("<<") || at_op(">>")) fail_at(peek(), "bitwise operators are not supported");
    return lhs;
  }

  NodePtr parse_arith() {
    auto lhs = parse_term();
    while (at_op("+") || at_op("-")) {
      Token op = take();
      lhs = binary(op.line, op.text, std::move(lhs), parse_term());
    }
    return lhs;
  }

  NodePtr parse_term() {
    auto lhs = parse_factor();
    while (at_op("*") || at_op("/") || at_op("//") || at_op("%")) {
      Token op = take();
      lhs = binary(op.line, op.text, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  NodePtr parse_factor() {
    if (at_op("-") || at_op("+")) {
      Token op = take();
      auto node = std::make_unique<Node>(NodeKind::UnaryOp, op.line);
      node->text = op.text;
      node->children.push_back(parse_factor());
      return node;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_postfix();
    if (at_op("**")) {
      Token op = take();
      return binary(op.line, "**", std::move(base), parse_factor());
    }
    return base;
  }

  void parse_call_args(Node& call) {
    expect_op("(");
    bool seen_keyword = false;
    while (!at_op(")")) {
      if (at_op("*") || at_op("**")) fail_at(peek(), "argument unpacking is not supported");
      if (at(Tok::Name) && peek(1).kind == Tok::Op && peek(1).text == "=") {
        Token name = take();
        take();
        auto kw = std::make_unique<Node>(NodeKind::Keyword, name.line);
        kw->text = name.text;
        kw->children.push_back(parse_test());
        call.children.push_back(std::move(kw));
        seen_keyword = true;
      } else {
        if (seen_keyword) fail_at(peek(), "positional argument follows keyword argument");
        call.children.push_back(parse_test());
        if (at_kw("for")) fail_at(peek(), "comprehension syntax is not supported");
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
  }

  NodePtr parse_postfix() {
    auto node = parse_atom();
    while (true) {
      if (at_op("(")) {
        if (node->kind != NodeKind::Name) fail_at(peek(), "only named functions can be called");
        auto call = std::make_unique<Node>(NodeKind::Call, node->line);
        call->text = node->text;
        parse_call_args(*call);
        node = std::move(call);
      } else if (at_op(".")) {
        Token dot = take();
        std::string attr = expect_name();
        if (!at_op("(")) fail_at(dot, "attribute access is only supported for method calls");
        auto call = std::make_unique<Node>(NodeKind::MethodCall, node->line);
        call->text = attr;
        call->children.push_back(std::move(node));
        parse_call_args(*call);
        node = std::move(call);
      } else if (at_op("[")) {
        Token open = take();
        node = parse_subscript(std::move(node), open.line);
      } else {
        return node;
      }
    }
  }

  NodePtr parse_subscript(NodePtr object, int line) {
    NodePtr parts[3];
    bool is_slice = false;
    int part = 0;
    while (true) {
      if (!at_op(":") && !at_op("]")) {
        if (part > 2) expected("']'");
        parts[part] = parse_test();
      }
      if (accept_op(":")) {
        is_slice = true;
        ++part;
        if (part > 2) expected("']'");
        continue;
      }
      break;
    }
    expect_op("]");
    if (!is_slice) {
      if (!parts[0]) fail_at(peek(), "empty subscript");
      auto node = std::make_unique<Node>(NodeKind::Index, line);
      node->children.push_back(std::move(object));
      node->children.push_back(std::move(parts[0]));
      return node;
    }
    auto node = std::make_unique<Node>(NodeKind::Slice, line);
    node->children.push_back(std::move(object));
    for (auto& p : parts) {
      node->children.push_back(p ? std::move(p) : std::make_unique<Node>(NodeKind::Empty, line));
    }
    return node;
  }

  NodePtr parse_sequence_body(NodeKind kind, std::string_view close, int line) {
    auto node = std::make_unique<Node>(kind, line);
    bool trailing_comma = false;
    while (!at_op(close)) {
      node->children.push_back(parse_test());
      if (at_kw("for")) fail_at(peek(), "comprehension syntax is not supported");
      trailing_comma = accept_op(",");
      if (!trailing_comma) break;
    }
    expect_op(close);
    if (kind == NodeKind::TupleLit && node->children.size() == 1 && !trailing_comma) {
      return std::move(node->children.front());
    }
    return node;
  }

  NodePtr parse_atom() {
    Token tok = peek();
    switch (tok.kind) {
      case Tok::Name: {
        take();
        auto node = std::make_unique<Node>(NodeKind::Name, tok.line);
        node->text = tok.text;
        return node;
      }
      case Tok::Int: {
        take();
        auto node = std::make_unique<Node>(NodeKind::IntLit, tok.line);
        node->int_value = tok.int_value;
        node->text = tok.text;
        return node;
      }
      case Tok::Float: {
        take();
        auto node = std::make_unique<Node>(NodeKind::FloatLit, tok.line);
        node->float_value = tok.float_value;
        node->text = tok.text;
        return node;
      }
      case Tok::String: {
        auto node = std::make_unique<Node>(NodeKind::StrLit, tok.line);
        while (at(Tok::String)) node->text += take().text;
        return node;
      }
      case Tok::Keyword: {
        if (tok.text == "True" || tok.text == "False") {
          take();
          auto node = std::make_unique<Node>(NodeKind::BoolLit, tok.line);
          node->bool_value = tok.text == "True";
          return node;
        }
        if (tok.text == "None") {
          take();
          return std::make_unique<Node>(NodeKind::NoneLit, tok.line);
        }
        break;
      }
      case Tok::Op: {
        if (tok.text == "(") {
          take();
          if (at_op(")")) {
            take();
            return std::make_unique<Node>(NodeKind::TupleLit, tok.line);
          }
          return parse_sequence_body(NodeKind::TupleLit, ")", tok.line);
        }
        if (tok.text == "[") {
          take();
          return parse_sequence_body(NodeKind::ListLit, "]", tok.line);
        }
        if (tok.text == "{") {
          take();
          return parse_dict(tok.line);
        }
        break;
      }
      default:
        break;
    }
    expected("an expression");
  }

  NodePtr parse_dict(int line) {
    auto node = std::make_unique<Node>(NodeKind::DictLit, line);
    while (!at_op("}")) {
      node->children.push_back(parse_test());
      if (at_kw("for")) fail_at(peek(), "comprehension syntax is not supported");
      if (!at_op(":")) fail_at(peek(), "set literals are not supported");
      take();
      node->children.push_back(parse_test());
      if (at_kw("for")) fail_at(peek(), "comprehension syntax is not supported");
      if (!accept_op(",")) break;
    }
    expect_op("}");
    return node;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// `import snoop` / `from snoop import ...` are tracer plumbing, not program logic.
void strip_tracer_imports(Node& module) {
  auto& children = module.children;
  children.erase(std::remove_if(children.begin(), children.end(),
                                [](const NodePtr& child) {
                                  return child->kind == NodeKind::Import &&
                                         child->text == "snoop";
                                }),
                 children.end());
}

}  // namespace

std::string normalize_source(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\r' && i + 1 < source.size() && source[i + 1] == '\n') continue;
    out.push_back(source[i]);
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

SourceProgram parse(std::string_view source, std::string program_id, int line_offset) {
  std::string normalized = normalize_source(source);
  bool blank = std::all_of(normalized.begin(), normalized.end(),
                           [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) throw ParseError(1, 1, "empty program");

  SourceProgram program;
  program.program_id_ = std::move(program_id);
  program.line_offset_ = line_offset;
  std::size_t start = 0;
  int number = 1;
  while (true) {
    std::size_t nl = normalized.find('\n', start);
    std::string_view piece = std::string_view(normalized).substr(
        start, nl == std::string::npos ? std::string::npos : nl - start);
    program.lines_.push_back(SourceLine{number++, std::string(piece)});
    if (nl == std::string::npos) break;
    start = nl + 1;
  }

  Lexer lexer(normalized);
  Parser parser(lexer.run());
  program.root_ = parser.parse_module();
  strip_tracer_imports(*program.root_);
  program.source_text_ = std::move(normalized);
  return program;
}

std::string_view SourceProgram::line_text(int number) const {
  static const std::string kEmpty;
  if (number < 1 || number > static_cast<int>(lines_.size())) return kEmpty;
  std::string_view text = lines_[number - 1].text;
  std::size_t end = text.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(0, end);
}

const Node* SourceProgram::find_function(std::string_view name) const {
  for (const auto& child : root_->children) {
    if (child->kind == NodeKind::FunctionDef && child->text == name) return child.get();
  }
  return nullptr;
}

nlohmann::ordered_json to_json(const Node& node) {
  nlohmann::ordered_json out;
  out["kind"] = to_string(node.kind);
  out["line"] = node.line;
  switch (node.kind) {
    case NodeKind::IntLit: out["value"] = node.int_value; break;
    case NodeKind::FloatLit: out["value"] = node.float_value; break;
    case NodeKind::BoolLit: out["value"] = node.bool_value; break;
    default:
      if (!node.text.empty()) out["text"] = node.text;
  }
  if (!node.ops.empty()) out["ops"] = node.ops;
  if (!node.names.empty()) out["names"] = node.names;
  nlohmann::ordered_json children = nlohmann::ordered_json::array();
  for (const auto& child : node.children) children.push_back(to_json(*child));
  out["children"] = std::move(children);
  return out;
}

nlohmann::ordered_json SourceProgram::ast_json() const { return to_json(*root_); }

}  // namespace tracecot::lang
