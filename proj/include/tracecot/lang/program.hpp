#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/common/error.hpp"
#include "tracecot/lang/ast.hpp"

namespace tracecot::lang {

inline constexpr std::string_view kEntryName = "main_solution";

struct SourceLine {
  int number;  // 1-based position in the normalized source
  std::string text;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error("parse_error", "line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// A parsed program. `line_offset` shifts the displayed line numbers so that a
// trace can match the numbering of the file the snippet was taken from; the
// line table itself is always 1-based.
class SourceProgram {
 public:
  const std::string& program_id() const { return program_id_; }
  const std::string& source_text() const { return source_text_; }
  const std::vector<SourceLine>& lines() const { return lines_; }
  const Node& ast_root() const { return *root_; }
  std::string_view entry_name() const { return kEntryName; }
  int line_offset() const { return line_offset_; }

  // Source text of a 1-based line, without trailing whitespace.
  std::string_view line_text(int number) const;
  int display_line(int number) const { return number + line_offset_; }

  // Top-level function definition by name, or nullptr.
  const Node* find_function(std::string_view name) const;
  const Node* entry_function() const { return find_function(kEntryName); }

  nlohmann::ordered_json ast_json() const;

 private:
  friend SourceProgram parse(std::string_view source, std::string program_id,
                             int line_offset);

  std::string program_id_;
  std::string source_text_;
  std::vector<SourceLine> lines_;
  NodePtr root_;
  int line_offset_ = 0;
};

// Parses MiniScript source. Throws ParseError on anything outside the grammar.
// `import snoop` lines and `@snoop` decorators are dropped before the AST is
// built; line numbering is unaffected.
SourceProgram parse(std::string_view source, std::string program_id = "program",
                    int line_offset = 0);

// CRLF -> LF and trailing newlines removed; joining lines() with '\n' yields this.
std::string normalize_source(std::string_view source);

nlohmann::ordered_json to_json(const Node& node);

}  // namespace tracecot::lang
