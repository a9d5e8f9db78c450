#include <cctype>
#include <charconv>
#include <unordered_map>

#include "psml/token.hpp"

namespace psml {

namespace {

const std::unordered_map<std::string, Tok>& keywords() {
  static const std::unordered_map<std::string, Tok> kMap = {
      {"public", Tok::kw_public},   {"static", Tok::kw_static},
      {"class", Tok::kw_class},     {"extends", Tok::kw_extends},
      {"import", Tok::kw_import},   {"void", Tok::kw_void},
      {"float", Tok::kw_float},     {"String", Tok::kw_string_type},
      {"Shape", Tok::kw_shape_type},{"rules", Tok::kw_rules},
      {"if", Tok::kw_if},           {"else", Tok::kw_else},
      {"for", Tok::kw_for},         {"while", Tok::kw_while},
      {"instanceof", Tok::kw_instanceof},
  };
  return kMap;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

class Lexer {
 public:
  Lexer(const std::string& src, std::string file)
      : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::end) break;
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(file_, line_, col_, msg);
  }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (peek() != '\0' && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        int startLine = line_, startCol = col_;
        advance();
        advance();
        for (;;) {
          if (peek() == '\0')
            throw ParseError(file_, startLine, startCol, "unterminated comment");
          if (peek() == '*' && peek(1) == '/') {
            advance();
            advance();
            break;
          }
          advance();
        }
      } else {
        return;
      }
    }
  }

  Token make(Tok kind, std::string text, int line, int col) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line;
    t.col = col;
    return t;
  }

  Token next() {
    int line = line_, col = col_;
    if (pos_ >= src_.size()) return make(Tok::end, "", line, col);
    char c = advance();
    switch (c) {
      case '(': return make(Tok::lparen, "(", line, col);
      case ')': return make(Tok::rparen, ")", line, col);
      case '{': return make(Tok::lbrace, "{", line, col);
      case '}': return make(Tok::rbrace, "}", line, col);
      case '[': return make(Tok::lbracket, "[", line, col);
      case ']': return make(Tok::rbracket, "]", line, col);
      case ',': return make(Tok::comma, ",", line, col);
      case ';': return make(Tok::semicolon, ";", line, col);
      case ':': return make(Tok::colon, ":", line, col);
      case '+': return make(Tok::plus, "+", line, col);
      case '-': return make(Tok::minus, "-", line, col);
      case '*': return make(Tok::star, "*", line, col);
      case '/': return make(Tok::slash, "/", line, col);
      case '%': return make(Tok::percent, "%", line, col);
      case '!':
        if (peek() == '=') { advance(); return make(Tok::ne, "!=", line, col); }
        return make(Tok::bang, "!", line, col);
      case '=':
        if (peek() == '=') { advance(); return make(Tok::eq, "==", line, col); }
        return make(Tok::assign, "=", line, col);
      case '<':
        if (peek() == '=') { advance(); return make(Tok::le, "<=", line, col); }
        return make(Tok::lt, "<", line, col);
      case '>':
        if (peek() == '=') { advance(); return make(Tok::ge, ">=", line, col); }
        return make(Tok::gt, ">", line, col);
      case '&':
        if (peek() == '&') { advance(); return make(Tok::and_and, "&&", line, col); }
        fail("stray '&'");
      case '|':
        if (peek() == '|') { advance(); return make(Tok::or_or, "||", line, col); }
        fail("stray '|'");
      case '"': return string_token(line, col);
      case '@': return attr_ref_token(line, col);
      case '.':
        if (digit(peek())) {
          --pos_;  // number() re-reads from the dot
          --col_;
          return number_token(line, col);
        }
        return make(Tok::dot, ".", line, col);
      default:
        break;
    }
    if (digit(c)) {
      --pos_;
      --col_;
      return number_token(line, col);
    }
    if (ident_start(c)) {
      std::string word(1, c);
      while (ident_char(peek())) word.push_back(advance());
      auto it = keywords().find(word);
      if (it != keywords().end()) return make(it->second, word, line, col);
      return make(Tok::identifier, word, line, col);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Token string_token(int line, int col) {
    std::string value;
    for (;;) {
      if (pos_ >= src_.size() || peek() == '\n')
        throw ParseError(file_, line, col, "unterminated string literal");
      char c = advance();
      if (c == '"') break;
      if (c == '\\') {
        char e = advance();
        switch (e) {
          case 'n': value.push_back('\n'); break;
          case 't': value.push_back('\t'); break;
          case '"': value.push_back('"'); break;
          case '\\': value.push_back('\\'); break;
          default:
            throw ParseError(file_, line_, col_, "unknown escape sequence");
        }
      } else {
        value.push_back(c);
      }
    }
    return make(Tok::string, value, line, col);
  }

  // @name or @name.name...; the token text excludes the '@'.
  Token attr_ref_token(int line, int col) {
    if (!ident_start(peek())) fail("expected attribute name after '@'");
    std::string key;
    for (;;) {
      key.push_back(advance());
      while (ident_char(peek())) key.push_back(advance());
      if (peek() == '.' && ident_start(peek(1))) {
        key.push_back(advance());
        continue;
      }
      break;
    }
    return make(Tok::attr_ref, key, line, col);
  }

  Token number_token(int line, int col) {
    size_t start = pos_;
    while (digit(peek())) advance();
    if (peek() == '.' && digit(peek(1))) {
      advance();
      while (digit(peek())) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) ||
         ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      while (digit(peek())) advance();
    }
    std::string text = src_.substr(start, pos_ - start);
    Token t = make(Tok::number, text, line, col);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      throw ParseError(file_, line, col, "malformed number '" + text + "'");
    t.num = value;
    return t;
  }

  const std::string& src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(const std::string& source, const std::string& fileName) {
  return Lexer(source, fileName).run();
}

const char* token_name(Tok kind) {
  switch (kind) {
    case Tok::end: return "end of input";
    case Tok::identifier: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::attr_ref: return "attribute reference";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::colon: return "':'";
    case Tok::dot: return "'.'";
    case Tok::assign: return "'='";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::percent: return "'%'";
    case Tok::lt: return "'<'";
    case Tok::gt: return "'>'";
    case Tok::le: return "'<='";
    case Tok::ge: return "'>='";
    case Tok::eq: return "'=='";
    case Tok::ne: return "'!='";
    case Tok::and_and: return "'&&'";
    case Tok::or_or: return "'||'";
    case Tok::bang: return "'!'";
    case Tok::kw_public: return "'public'";
    case Tok::kw_static: return "'static'";
    case Tok::kw_class: return "'class'";
    case Tok::kw_extends: return "'extends'";
    case Tok::kw_import: return "'import'";
    case Tok::kw_void: return "'void'";
    case Tok::kw_float: return "'float'";
    case Tok::kw_string_type: return "'String'";
    case Tok::kw_shape_type: return "'Shape'";
    case Tok::kw_rules: return "'rules'";
    case Tok::kw_if: return "'if'";
    case Tok::kw_else: return "'else'";
    case Tok::kw_for: return "'for'";
    case Tok::kw_while: return "'while'";
    case Tok::kw_instanceof: return "'instanceof'";
  }
  return "?";
}

}  // namespace psml
