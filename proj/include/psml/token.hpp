#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace psml {

enum class Tok {
  end,
  identifier,
  number,
  string,
  attr_ref,  // @group.key, one token
  lparen,
  rparen,
  lbrace,
  rbrace,
  lbracket,
  rbracket,
  comma,
  semicolon,
  colon,
  dot,
  assign,
  plus,
  minus,
  star,
  slash,
  percent,
  lt,
  gt,
  le,
  ge,
  eq,
  ne,
  and_and,
  or_or,
  bang,
  kw_public,
  kw_static,
  kw_class,
  kw_extends,
  kw_import,
  kw_void,
  kw_float,
  kw_string_type,
  kw_shape_type,
  kw_rules,
  kw_if,
  kw_else,
  kw_for,
  kw_while,
  kw_instanceof,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double num = 0.0;
  int line = 1;  // 1-based
  int col = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, int line, int col, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        file_(std::move(file)),
        line_(line),
        col_(col) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  std::string file_;
  int line_;
  int col_;
};

// Splits source into tokens. Comments (// and /* */) are skipped; the final
// token is always Tok::end. Throws ParseError on malformed input.
std::vector<Token> tokenize(const std::string& source, const std::string& fileName);

const char* token_name(Tok kind);

}  // namespace psml
