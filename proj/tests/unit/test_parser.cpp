#include <gtest/gtest.h>

#include "tracecot/lang/program.hpp"
#include "tracecot/lang/samples.hpp"
#include "tracecot/lang/validate.hpp"

using namespace tracecot::lang;

namespace {

const Node& first_function(const SourceProgram& program) {
  for (const auto& child : program.ast_root().children) {
    if (child->kind == NodeKind::FunctionDef) return *child;
  }
  throw std::runtime_error("no function");
}

}  // namespace

TEST(Parser, SamplesParseAndValidate) {
  for (const auto& sample : sample_programs()) {
    SourceProgram program = parse(sample.source, std::string(sample.name), sample.line_offset);
    EXPECT_NE(program.entry_function(), nullptr) << sample.name;
    ValidationReport report = validate(program, LanguagePolicy{});
    EXPECT_TRUE(report.accepted()) << sample.name << ": "
                                   << (report.violations.empty() ? "" : report.violations[0].message);
  }
}

TEST(Parser, LineTableAndOffset) {
  SourceProgram program = parse(find_sample("base7")->source, "base7", 37);
  EXPECT_EQ(program.lines().size(), 7u);
  EXPECT_EQ(program.display_line(1), 38);
  EXPECT_EQ(program.line_text(4), "    elif num < 7:");
}

TEST(Parser, SnoopIsStrippedWithoutRenumbering) {
  SourceProgram program = parse(
      "import snoop\n\n@snoop\ndef main_solution(x):\n    return x\nmain_solution(x=1)\n");
  const Node& fn = first_function(program);
  EXPECT_EQ(fn.line, 4);
  EXPECT_TRUE(fn.names.empty());
  for (const auto& child : program.ast_root().children) {
    EXPECT_NE(child->kind, NodeKind::Import);
  }
  EXPECT_TRUE(validate(program, LanguagePolicy{}).accepted());
}

TEST(Parser, ElifChainShape) {
  SourceProgram program = parse(
      "def main_solution(a):\n    if a:\n        return 1\n    elif a > 2:\n        return 2\n"
      "    else:\n        return 3\n");
  const Node& body = *first_function(program).children.back();
  const Node& top = *body.children.front();
  ASSERT_EQ(top.kind, NodeKind::If);
  ASSERT_EQ(top.children.size(), 3u);
  EXPECT_EQ(top.children[2]->kind, NodeKind::If);
  EXPECT_EQ(top.children[2]->text, "elif");
  EXPECT_EQ(top.children[2]->children[2]->kind, NodeKind::Block);
}

TEST(Parser, ImplicitJoinInsideBrackets) {
  SourceProgram program = parse("def main_solution(a):\n    x = [1,\n         2]\n    return x\n");
  const Node& body = *first_function(program).children.back();
  EXPECT_EQ(body.children.size(), 2u);
  EXPECT_EQ(body.children[1]->line, 4);
}

TEST(Parser, ComparisonChain) {
  SourceProgram program = parse("def main_solution(a):\n    return 1 < a <= 3 not in [2]\n");
  const Node& ret = *first_function(program).children.back()->children.front();
  const Node& cmp = *ret.children.front();
  ASSERT_EQ(cmp.kind, NodeKind::Compare);
  EXPECT_EQ(cmp.ops, (std::vector<std::string>{"<", "<=", "not in"}));
}

TEST(Parser, RejectsOutsideGrammar) {
  const char* bad[] = {
      "def main_solution(a):\n    return [x for x in a]\n",
      "def main_solution(a):\n    return lambda: 1\n",
      "class A:\n    pass\n",
      "def main_solution(a):\n    try:\n        pass\n",
      "def main_solution(a):\n  return 1\n   return 2\n",
      "def main_solution(a):\n    return f'{a}'\n",
      "def main_solution(a):\n    return (1\n",
      "def main_solution(a):\n    return a.b\n",
  };
  for (const char* source : bad) {
    EXPECT_THROW(parse(source), ParseError) << source;
  }
}

TEST(Parser, ParseErrorCarriesPosition) {
  try {
    parse("def main_solution(a):\n    x = = 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.code(), "parse_error");
  }
}

TEST(Parser, AstJsonIsStructured) {
  SourceProgram program = parse("def main_solution(a):\n    return a + 1\n");
  auto json = program.ast_json();
  EXPECT_EQ(json["kind"], "Module");
  EXPECT_EQ(json["children"][0]["kind"], "FunctionDef");
}

TEST(Validate, Violations) {
  auto rules = [](const char* source) {
    std::vector<std::string> ids;
    for (const auto& v : validate(parse(source), LanguagePolicy{}).violations) ids.push_back(v.rule_id);
    return ids;
  };
  EXPECT_EQ(rules("import random\ndef main_solution(a):\n    return a\n"),
            std::vector<std::string>{"banned_module"});
  EXPECT_EQ(rules("def f(a):\n    return a\n"), std::vector<std::string>{"missing_entry"});
  EXPECT_EQ(rules("def main_solution(a):\n    return eval(a)\n"),
            std::vector<std::string>{"unknown_callable"});
  EXPECT_EQ(rules("def main_solution(a):\n    return a.frobnicate()\n"),
            std::vector<std::string>{"unknown_method"});
  EXPECT_EQ(rules("def main_solution(a):\n    def g():\n        return 1\n    return g()\n"),
            std::vector<std::string>{"nested_function"});
  EXPECT_EQ(rules("def main_solution(a):\n    return a\nprint(1)\n"),
            std::vector<std::string>{"toplevel_statement"});
  auto dup = rules("def main_solution(a):\n    return a\ndef main_solution(b):\n    return b\n");
  EXPECT_EQ(dup, std::vector<std::string>{"duplicate_function"});
}
