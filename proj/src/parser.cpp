#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "psml/parser.hpp"

namespace psml {

namespace ast {

ExprPtr make_expr(Expr::Kind kind, int line, int col) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->line = line;
  e->col = col;
  return e;
}

StmtPtr make_stmt(Stmt::Kind kind, int line, int col) {
  auto s = std::make_shared<Stmt>();
  s->kind = kind;
  s->line = line;
  s->col = col;
  return s;
}

}  // namespace ast

namespace {

using namespace ast;

std::string file_stem(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name;
}

class Parser {
 public:
  Parser(const std::string& source, std::string file)
      : file_(std::move(file)), toks_(tokenize(source, file_)) {}

  Program program() {
    Program p;
    p.sourceFile = file_;
    while (at(Tok::kw_import)) {
      eat();
      p.imports.push_back(dotted_name());
      expect(Tok::semicolon);
    }
    expect(Tok::kw_public);
    expect(Tok::kw_class);
    Token nameTok = expect(Tok::identifier);
    p.grammarName = nameTok.text;
    std::string stem = file_stem(file_);
    if (!stem.empty() && stem != p.grammarName)
      throw ParseError(file_, nameTok.line, nameTok.col,
                       "class name '" + p.grammarName +
                           "' does not match file stem '" + stem + "'");
    if (at(Tok::kw_extends)) {
      eat();
      p.baseClass = expect(Tok::identifier).text;
    }
    expect(Tok::lbrace);
    while (!at(Tok::rbrace)) {
      if (at(Tok::kw_public)) {
        p.methods.push_back(method());
      } else if (at(Tok::kw_float) || at(Tok::kw_string_type) || at(Tok::kw_shape_type)) {
        p.fields.push_back(declaration());
      } else {
        fail("expected field or method declaration");
      }
    }
    expect(Tok::rbrace);
    expect(Tok::end);
    validate(p);
    return p;
  }

  AttributeFile attribute_file() {
    AttributeFile f;
    f.sourceFile = file_;
    std::set<std::string> groupNames;
    while (!at(Tok::end)) {
      Token kw = expect(Tok::identifier);
      if (kw.text != "attributes")
        throw ParseError(file_, kw.line, kw.col, "expected 'attributes'");
      AttributeGroup g;
      Token nameTok = expect(Tok::identifier);
      g.name = nameTok.text;
      g.line = nameTok.line;
      g.col = nameTok.col;
      if (!groupNames.insert(g.name).second)
        throw ParseError(file_, nameTok.line, nameTok.col,
                         "duplicate attribute group '" + g.name + "'");
      expect(Tok::lbrace);
      std::set<std::string> keys;
      while (!at(Tok::rbrace)) {
        Token keyTok = peek();
        std::string key = dotted_name();
        if (!keys.insert(key).second)
          throw ParseError(file_, keyTok.line, keyTok.col,
                           "duplicate attribute key '" + key + "' in group '" +
                               g.name + "'");
        expect(Tok::assign);
        g.entries.emplace_back(key, attribute_value());
        expect(Tok::semicolon);
      }
      expect(Tok::rbrace);
      f.groups.push_back(std::move(g));
    }
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(file_, t.line, t.col, msg);
  }

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    if (i >= toks_.size()) i = toks_.size() - 1;
    return toks_[i];
  }

  bool at(Tok kind, size_t ahead = 0) const { return peek(ahead).kind == kind; }

  Token eat() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  Token expect(Tok kind) {
    if (!at(kind))
      fail(std::string("expected ") + token_name(kind) + ", found " +
           token_name(peek().kind) +
           (peek().text.empty() ? "" : " '" + peek().text + "'"));
    return eat();
  }

  std::string dotted_name() {
    std::string name = expect(Tok::identifier).text;
    while (at(Tok::dot) && at(Tok::identifier, 1)) {
      eat();
      name += "." + expect(Tok::identifier).text;
    }
    return name;
  }

  std::string type_name() {
    std::string base;
    if (at(Tok::kw_float)) base = "float";
    else if (at(Tok::kw_string_type)) base = "String";
    else if (at(Tok::kw_shape_type)) base = "Shape";
    else fail("expected type name");
    eat();
    if (at(Tok::lbracket) && at(Tok::rbracket, 1)) {
      eat();
      eat();
      base += "[]";
    }
    return base;
  }

  // type name [= init] {, name [= init]} ;
  StmtPtr declaration() {
    Token start = peek();
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::decl;
    s->line = start.line;
    s->col = start.col;
    s->declType = type_name();
    for (;;) {
      std::string name = expect(Tok::identifier).text;
      ExprPtr init;
      if (at(Tok::assign)) {
        eat();
        init = expression();
      }
      s->declarators.emplace_back(std::move(name), init);
      if (at(Tok::comma)) {
        eat();
        continue;
      }
      break;
    }
    expect(Tok::semicolon);
    return s;
  }

  Method method() {
    Method m;
    Token start = expect(Tok::kw_public);
    m.line = start.line;
    m.col = start.col;
    bool isStatic = false;
    if (at(Tok::kw_static)) {
      eat();
      isStatic = true;
    }
    if (at(Tok::kw_void)) eat();  // return type; methods return nothing
    Token nameTok = expect(Tok::identifier);
    m.name = nameTok.text;
    expect(Tok::lparen);
    while (!at(Tok::rparen)) {
      Param param;
      param.type = type_name();
      param.name = expect(Tok::identifier).text;
      m.params.push_back(std::move(param));
      if (at(Tok::comma)) eat();
      else break;
    }
    expect(Tok::rparen);
    m.isMain = isStatic && m.name == "main";
    m.body = block_body();
    return m;
  }

  std::vector<StmtPtr> block_body() {
    expect(Tok::lbrace);
    std::vector<StmtPtr> body;
    while (!at(Tok::rbrace)) body.push_back(statement());
    expect(Tok::rbrace);
    return body;
  }

  StmtPtr statement() {
    if (at(Tok::kw_float) || at(Tok::kw_string_type) || at(Tok::kw_shape_type))
      return declaration();
    if (at(Tok::kw_rules)) return rules_statement();
    if (at(Tok::kw_if)) return if_statement();
    if (at(Tok::kw_for)) return for_statement();
    if (at(Tok::kw_while)) return while_statement();
    if (at(Tok::lbrace)) {
      Token start = peek();
      auto s = std::make_shared<Stmt>();
      s->kind = Stmt::Kind::block;
      s->line = start.line;
      s->col = start.col;
      s->body = block_body();
      return s;
    }
    StmtPtr s = simple_statement();
    expect(Tok::semicolon);
    return s;
  }

  // Assignment or expression statement, no trailing semicolon.
  StmtPtr simple_statement() {
    Token start = peek();
    ExprPtr e = expression();
    if (at(Tok::assign)) {
      eat();
      auto s = std::make_shared<Stmt>();
      s->kind = Stmt::Kind::assign;
      s->line = start.line;
      s->col = start.col;
      if (e->kind == Expr::Kind::ident) {
        s->target = e->text;
      } else if (e->kind == Expr::Kind::index &&
                 e->args[0]->kind == Expr::Kind::ident) {
        s->target = e->args[0]->text;
        s->targetIndex = e->args[1];
      } else {
        throw ParseError(file_, start.line, start.col,
                         "assignment target must be a variable or element");
      }
      s->value = expression();
      return s;
    }
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::expr;
    s->line = start.line;
    s->col = start.col;
    s->expr = e;
    return s;
  }

  StmtPtr if_statement() {
    Token start = expect(Tok::kw_if);
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::if_else;
    s->line = start.line;
    s->col = start.col;
    expect(Tok::lparen);
    s->value = expression();
    expect(Tok::rparen);
    s->body = branch_body();
    if (at(Tok::kw_else)) {
      eat();
      s->elseBody = branch_body();
    }
    return s;
  }

  std::vector<StmtPtr> branch_body() {
    if (at(Tok::lbrace)) return block_body();
    return {statement()};
  }

  StmtPtr for_statement() {
    Token start = expect(Tok::kw_for);
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::for_loop;
    s->line = start.line;
    s->col = start.col;
    expect(Tok::lparen);
    if (at(Tok::semicolon)) {
      eat();
    } else if (at(Tok::kw_float) || at(Tok::kw_string_type) || at(Tok::kw_shape_type)) {
      s->forInit = declaration();  // consumes the ';'
    } else {
      s->forInit = simple_statement();
      expect(Tok::semicolon);
    }
    if (!at(Tok::semicolon)) s->value = expression();
    expect(Tok::semicolon);
    if (!at(Tok::rparen)) s->forUpdate = simple_statement();
    expect(Tok::rparen);
    s->body = branch_body();
    return s;
  }

  StmtPtr while_statement() {
    Token start = expect(Tok::kw_while);
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::while_loop;
    s->line = start.line;
    s->col = start.col;
    expect(Tok::lparen);
    s->value = expression();
    expect(Tok::rparen);
    s->body = branch_body();
    return s;
  }

  StmtPtr rules_statement() {
    Token start = expect(Tok::kw_rules);
    auto s = std::make_shared<Stmt>();
    s->kind = Stmt::Kind::rules;
    s->line = start.line;
    s->col = start.col;
    s->rules.line = start.line;
    s->rules.col = start.col;
    if (at(Tok::identifier)) s->rules.label = eat().text;
    expect(Tok::lbrace);
    while (!at(Tok::rbrace)) s->rules.rules.push_back(rule());
    expect(Tok::rbrace);
    return s;
  }

  Rule rule() {
    Rule r;
    Token pred = expect(Tok::identifier);
    r.predecessor = pred.text;
    r.line = pred.line;
    r.col = pred.col;
    expect(Tok::colon);
    if (!at(Tok::colon)) r.condition = expression();
    expect(Tok::colon);
    while (!at(Tok::lbrace)) r.functions.push_back(rule_function());
    expect(Tok::lbrace);
    if (!at(Tok::rbrace)) {
      for (;;) {
        r.successors.push_back(successor());
        if (at(Tok::comma)) {
          eat();
          continue;
        }
        break;
      }
    }
    expect(Tok::rbrace);
    expect(Tok::semicolon);
    return r;
  }

  FuncCall rule_function() {
    FuncCall f;
    Token nameTok = peek();
    if (at(Tok::kw_void)) {
      eat();
      f.name = "void";
    } else {
      f.name = expect(Tok::identifier).text;
    }
    f.line = nameTok.line;
    f.col = nameTok.col;
    expect(Tok::lparen);
    while (!at(Tok::rparen)) {
      f.args.push_back(expression());
      if (at(Tok::comma)) eat();
      else break;
    }
    expect(Tok::rparen);
    return f;
  }

  Successor successor() {
    Successor s;
    Token nameTok = expect(Tok::identifier);
    s.symbol = nameTok.text;
    s.line = nameTok.line;
    s.col = nameTok.col;
    if (at(Tok::lparen)) {
      eat();
      s.isCall = true;
      while (!at(Tok::rparen)) {
        s.args.push_back(expression());
        if (at(Tok::comma)) eat();
        else break;
      }
      expect(Tok::rparen);
    }
    return s;
  }

  AttrValue attribute_value() {
    AttrValue v;
    if (at(Tok::minus) || at(Tok::number)) {
      double sign = 1.0;
      if (at(Tok::minus)) {
        eat();
        sign = -1.0;
      }
      v.num = sign * expect(Tok::number).num;
      return v;
    }
    if (at(Tok::string)) {
      v.isString = true;
      v.str = eat().text;
      return v;
    }
    if (at(Tok::identifier)) {
      v.isString = true;
      v.str = dotted_name();
      return v;
    }
    fail("expected attribute value");
  }

  // Expression grammar, loosest to tightest:
  //   or: and { || and }
  //   and: cmp { && cmp }
  //   cmp: add [ relop add ] | add instanceof DottedName
  //   add: mul { (+|-) mul }
  //   mul: unary { (*|/|%) unary }
  //   unary: [-|!] postfix
  //   postfix: primary { .name [(args)] | [expr] }
  //   primary: number | string | @ref | (expr) | {elems} | name [(args)]
  ExprPtr expression() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr left = and_expr();
    while (at(Tok::or_or)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::binary;
      e->line = op.line;
      e->col = op.col;
      e->text = "||";
      e->args = {left, and_expr()};
      left = e;
    }
    return left;
  }

  ExprPtr and_expr() {
    ExprPtr left = cmp_expr();
    while (at(Tok::and_and)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::binary;
      e->line = op.line;
      e->col = op.col;
      e->text = "&&";
      e->args = {left, cmp_expr()};
      left = e;
    }
    return left;
  }

  ExprPtr cmp_expr() {
    ExprPtr left = add_expr();
    if (at(Tok::kw_instanceof)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::instance_of;
      e->line = op.line;
      e->col = op.col;
      e->text = dotted_name();
      e->args = {left};
      return e;
    }
    if (at(Tok::lt) || at(Tok::gt) || at(Tok::le) || at(Tok::ge) || at(Tok::eq) ||
        at(Tok::ne)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::binary;
      e->line = op.line;
      e->col = op.col;
      e->text = op.text;
      e->args = {left, add_expr()};
      return e;
    }
    return left;
  }

  ExprPtr add_expr() {
    ExprPtr left = mul_expr();
    while (at(Tok::plus) || at(Tok::minus)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::binary;
      e->line = op.line;
      e->col = op.col;
      e->text = op.text;
      e->args = {left, mul_expr()};
      left = e;
    }
    return left;
  }

  ExprPtr mul_expr() {
    ExprPtr left = unary_expr();
    while (at(Tok::star) || at(Tok::slash) || at(Tok::percent)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::binary;
      e->line = op.line;
      e->col = op.col;
      e->text = op.text;
      e->args = {left, unary_expr()};
      left = e;
    }
    return left;
  }

  ExprPtr unary_expr() {
    if (at(Tok::minus) || at(Tok::bang)) {
      Token op = eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::unary;
      e->line = op.line;
      e->col = op.col;
      e->text = op.text;
      e->args = {unary_expr()};
      return e;
    }
    return postfix_expr();
  }

  ExprPtr postfix_expr() {
    ExprPtr e = primary_expr();
    for (;;) {
      if (at(Tok::dot) && at(Tok::identifier, 1)) {
        Token dot = eat();
        std::string member = expect(Tok::identifier).text;
        if (at(Tok::lparen)) {
          eat();
          auto call = std::make_shared<Expr>();
          call->kind = Expr::Kind::method_call;
          call->line = dot.line;
          call->col = dot.col;
          call->text = member;
          call->args.push_back(e);
          while (!at(Tok::rparen)) {
            call->args.push_back(expression());
            if (at(Tok::comma)) eat();
            else break;
          }
          expect(Tok::rparen);
          e = call;
        } else {
          auto mem = std::make_shared<Expr>();
          mem->kind = Expr::Kind::member;
          mem->line = dot.line;
          mem->col = dot.col;
          mem->text = member;
          mem->args.push_back(e);
          e = mem;
        }
      } else if (at(Tok::lbracket)) {
        Token br = eat();
        auto idx = std::make_shared<Expr>();
        idx->kind = Expr::Kind::index;
        idx->line = br.line;
        idx->col = br.col;
        idx->args = {e, expression()};
        expect(Tok::rbracket);
        e = idx;
      } else {
        return e;
      }
    }
  }

  ExprPtr primary_expr() {
    Token t = peek();
    if (at(Tok::number)) {
      eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::number;
      e->line = t.line;
      e->col = t.col;
      e->num = t.num;
      e->text = t.text;
      return e;
    }
    if (at(Tok::string)) {
      eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::string;
      e->line = t.line;
      e->col = t.col;
      e->text = t.text;
      return e;
    }
    if (at(Tok::attr_ref)) {
      eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::attr_ref;
      e->line = t.line;
      e->col = t.col;
      e->text = t.text;
      return e;
    }
    if (at(Tok::lparen)) {
      eat();
      ExprPtr inner = expression();
      expect(Tok::rparen);
      return inner;
    }
    if (at(Tok::lbrace)) {
      eat();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::array;
      e->line = t.line;
      e->col = t.col;
      while (!at(Tok::rbrace)) {
        e->args.push_back(expression());
        if (at(Tok::comma)) eat();
        else break;
      }
      expect(Tok::rbrace);
      return e;
    }
    if (at(Tok::identifier)) {
      eat();
      if (at(Tok::lparen)) {
        eat();
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::call;
        e->line = t.line;
        e->col = t.col;
        e->text = t.text;
        while (!at(Tok::rparen)) {
          e->args.push_back(expression());
          if (at(Tok::comma)) eat();
          else break;
        }
        expect(Tok::rparen);
        return e;
      }
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::ident;
      e->line = t.line;
      e->col = t.col;
      e->text = t.text;
      return e;
    }
    fail(std::string("expected expression, found ") + token_name(t.kind));
  }

  void validate(const Program& p) {
    int mains = 0;
    for (const auto& m : p.methods) {
      if (m.isMain) ++mains;
      if (!contains_rules(m.body))
        throw ParseError(file_, m.line, m.col,
                         "method '" + m.name + "' has no rules block");
    }
    if (mains == 0)
      throw ParseError(file_, 1, 1,
                       "grammar '" + p.grammarName + "' has no main method");
    if (mains > 1)
      throw ParseError(file_, 1, 1,
                       "grammar '" + p.grammarName + "' has multiple main methods");
  }

  static bool contains_rules(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::rules:
          return true;
        case Stmt::Kind::if_else:
          if (contains_rules(s->body) || contains_rules(s->elseBody)) return true;
          break;
        case Stmt::Kind::for_loop:
        case Stmt::Kind::while_loop:
        case Stmt::Kind::block:
          if (contains_rules(s->body)) return true;
          break;
        default:
          break;
      }
    }
    return false;
  }

  std::string file_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

// ---- printing ----

std::string fmt_num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Printer {
 public:
  std::string run(const Program& p) {
    for (const auto& imp : p.imports) line("import " + imp + ";");
    std::string head = "public class " + p.grammarName;
    if (!p.baseClass.empty()) head += " extends " + p.baseClass;
    line(head + " {");
    ++depth_;
    for (const auto& f : p.fields) stmt(*f);
    for (const auto& m : p.methods) {
      line("");
      method(m);
    }
    --depth_;
    line("}");
    return out_.str();
  }

 private:
  void indent() {
    for (int i = 0; i < depth_; ++i) out_ << '\t';
  }

  void line(const std::string& s) {
    if (!s.empty()) {
      indent();
      out_ << s;
    }
    out_ << '\n';
  }

  void method(const Method& m) {
    std::string head = "public ";
    if (m.isMain) head += "static void ";
    head += m.name + "(";
    for (size_t i = 0; i < m.params.size(); ++i) {
      if (i) head += ", ";
      head += m.params[i].type + " " + m.params[i].name;
    }
    head += ") {";
    line(head);
    ++depth_;
    for (const auto& s : m.body) stmt(*s);
    --depth_;
    line("}");
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::decl:
        line(decl_text(s) + ";");
        break;
      case Stmt::Kind::assign:
        line(assign_text(s) + ";");
        break;
      case Stmt::Kind::expr:
        line(expr(*s.expr) + ";");
        break;
      case Stmt::Kind::if_else: {
        line("if (" + expr(*s.value) + ") {");
        ++depth_;
        for (const auto& b : s.body) stmt(*b);
        --depth_;
        if (s.elseBody.empty()) {
          line("}");
        } else {
          line("} else {");
          ++depth_;
          for (const auto& b : s.elseBody) stmt(*b);
          --depth_;
          line("}");
        }
        break;
      }
      case Stmt::Kind::for_loop: {
        std::string head = "for (";
        if (s.forInit) {
          head += s.forInit->kind == Stmt::Kind::decl ? decl_text(*s.forInit)
                                                      : assign_text(*s.forInit);
        }
        head += "; ";
        if (s.value) head += expr(*s.value);
        head += "; ";
        if (s.forUpdate) head += assign_text(*s.forUpdate);
        head += ") {";
        line(head);
        ++depth_;
        for (const auto& b : s.body) stmt(*b);
        --depth_;
        line("}");
        break;
      }
      case Stmt::Kind::while_loop:
        line("while (" + expr(*s.value) + ") {");
        ++depth_;
        for (const auto& b : s.body) stmt(*b);
        --depth_;
        line("}");
        break;
      case Stmt::Kind::block:
        line("{");
        ++depth_;
        for (const auto& b : s.body) stmt(*b);
        --depth_;
        line("}");
        break;
      case Stmt::Kind::rules: {
        std::string head = "rules ";
        if (!s.rules.label.empty()) head += s.rules.label + " ";
        head += "{";
        line(head);
        ++depth_;
        for (const auto& r : s.rules.rules) rule(r);
        --depth_;
        line("}");
        break;
      }
    }
  }

  std::string decl_text(const Stmt& s) {
    std::string out = s.declType + " ";
    for (size_t i = 0; i < s.declarators.size(); ++i) {
      if (i) out += ", ";
      out += s.declarators[i].first;
      if (s.declarators[i].second) out += " = " + expr(*s.declarators[i].second);
    }
    return out;
  }

  std::string assign_text(const Stmt& s) {
    std::string out = s.target;
    if (s.targetIndex) out += "[" + expr(*s.targetIndex) + "]";
    out += " = " + expr(*s.value);
    return out;
  }

  void rule(const Rule& r) {
    std::string out = r.predecessor + " : ";
    if (r.condition) out += expr(*r.condition) + " ";
    out += ": ";
    for (const auto& f : r.functions) {
      out += f.name + "(";
      for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) out += ", ";
        out += expr(*f.args[i]);
      }
      out += ") ";
    }
    out += "{";
    for (size_t i = 0; i < r.successors.size(); ++i) {
      if (i) out += ", ";
      out += r.successors[i].symbol;
      if (r.successors[i].isCall) {
        out += "(";
        for (size_t j = 0; j < r.successors[i].args.size(); ++j) {
          if (j) out += ", ";
          out += expr(*r.successors[i].args[j]);
        }
        out += ")";
      }
    }
    out += "};";
    line(out);
  }

  // Parenthesizes compound children; cheap and reparse-stable.
  std::string expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::number:
        return fmt_num(e.num);
      case Expr::Kind::string: {
        std::string out = "\"";
        for (char c : e.text) {
          if (c == '"' || c == '\\') out += '\\';
          if (c == '\n') { out += "\\n"; continue; }
          out += c;
        }
        return out + "\"";
      }
      case Expr::Kind::ident:
        return e.text;
      case Expr::Kind::attr_ref:
        return "@" + e.text;
      case Expr::Kind::array: {
        std::string out = "{";
        for (size_t i = 0; i < e.args.size(); ++i) {
          if (i) out += ", ";
          out += expr(*e.args[i]);
        }
        return out + "}";
      }
      case Expr::Kind::unary:
        return e.text + wrap(*e.args[0]);
      case Expr::Kind::binary:
        return wrap(*e.args[0]) + " " + e.text + " " + wrap(*e.args[1]);
      case Expr::Kind::member:
        return wrap(*e.args[0]) + "." + e.text;
      case Expr::Kind::call: {
        std::string out = e.text + "(";
        for (size_t i = 1; i <= e.args.size(); ++i) {
          if (i > 1) out += ", ";
          out += expr(*e.args[i - 1]);
        }
        return out + ")";
      }
      case Expr::Kind::method_call: {
        std::string out = wrap(*e.args[0]) + "." + e.text + "(";
        for (size_t i = 1; i < e.args.size(); ++i) {
          if (i > 1) out += ", ";
          out += expr(*e.args[i]);
        }
        return out + ")";
      }
      case Expr::Kind::index:
        return wrap(*e.args[0]) + "[" + expr(*e.args[1]) + "]";
      case Expr::Kind::instance_of:
        return wrap(*e.args[0]) + " instanceof " + e.text;
    }
    return "";
  }

  std::string wrap(const Expr& e) {
    bool compound = e.kind == Expr::Kind::binary || e.kind == Expr::Kind::unary ||
                    e.kind == Expr::Kind::instance_of;
    std::string s = expr(e);
    return compound ? "(" + s + ")" : s;
  }

  std::ostringstream out_;
  int depth_ = 0;
};

class Dumper {
 public:
  std::string run(const Program& p) {
    out_ << "(program " << p.grammarName << " base=" << p.baseClass;
    for (const auto& imp : p.imports) out_ << " import=" << imp;
    for (const auto& f : p.fields) stmt(*f);
    for (const auto& m : p.methods) {
      out_ << "(method " << m.name << (m.isMain ? " main" : "");
      for (const auto& prm : m.params) out_ << " (" << prm.type << " " << prm.name << ")";
      for (const auto& s : m.body) stmt(*s);
      out_ << ")";
    }
    out_ << ")";
    return out_.str();
  }

 private:
  void stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::decl:
        out_ << "(decl " << s.declType;
        for (const auto& [name, init] : s.declarators) {
          out_ << " (" << name;
          if (init) expr(*init);
          out_ << ")";
        }
        out_ << ")";
        break;
      case Stmt::Kind::assign:
        out_ << "(assign " << s.target;
        if (s.targetIndex) expr(*s.targetIndex);
        expr(*s.value);
        out_ << ")";
        break;
      case Stmt::Kind::expr:
        out_ << "(expr";
        expr(*s.expr);
        out_ << ")";
        break;
      case Stmt::Kind::if_else:
        out_ << "(if";
        expr(*s.value);
        out_ << "(then";
        for (const auto& b : s.body) stmt(*b);
        out_ << ")(else";
        for (const auto& b : s.elseBody) stmt(*b);
        out_ << "))";
        break;
      case Stmt::Kind::for_loop:
        out_ << "(for";
        out_ << "(init";
        if (s.forInit) stmt(*s.forInit);
        out_ << ")(cond";
        if (s.value) expr(*s.value);
        out_ << ")(step";
        if (s.forUpdate) stmt(*s.forUpdate);
        out_ << ")(body";
        for (const auto& b : s.body) stmt(*b);
        out_ << "))";
        break;
      case Stmt::Kind::while_loop:
        out_ << "(while";
        expr(*s.value);
        for (const auto& b : s.body) stmt(*b);
        out_ << ")";
        break;
      case Stmt::Kind::block:
        out_ << "(block";
        for (const auto& b : s.body) stmt(*b);
        out_ << ")";
        break;
      case Stmt::Kind::rules:
        out_ << "(rules " << s.rules.label;
        for (const auto& r : s.rules.rules) {
          out_ << "(rule " << r.predecessor << "(cond";
          if (r.condition) expr(*r.condition);
          out_ << ")";
          for (const auto& f : r.functions) {
            out_ << "(fn " << f.name;
            for (const auto& a : f.args) expr(*a);
            out_ << ")";
          }
          for (const auto& suc : r.successors) {
            out_ << "(succ " << suc.symbol << (suc.isCall ? " call" : "");
            for (const auto& a : suc.args) expr(*a);
            out_ << ")";
          }
          out_ << ")";
        }
        out_ << ")";
        break;
    }
  }

  void expr(const Expr& e) {
    out_ << "(";
    switch (e.kind) {
      case Expr::Kind::number: out_ << "num " << fmt_num(e.num); break;
      case Expr::Kind::string: out_ << "str " << e.text; break;
      case Expr::Kind::ident: out_ << "id " << e.text; break;
      case Expr::Kind::attr_ref: out_ << "attr " << e.text; break;
      case Expr::Kind::array: out_ << "arr"; break;
      case Expr::Kind::unary: out_ << "un " << e.text; break;
      case Expr::Kind::binary: out_ << "bin " << e.text; break;
      case Expr::Kind::member: out_ << "mem " << e.text; break;
      case Expr::Kind::call: out_ << "call " << e.text; break;
      case Expr::Kind::method_call: out_ << "mcall " << e.text; break;
      case Expr::Kind::index: out_ << "idx"; break;
      case Expr::Kind::instance_of: out_ << "iof " << e.text; break;
    }
    for (const auto& a : e.args) expr(*a);
    out_ << ")";
  }

  std::ostringstream out_;
};

}  // namespace

ast::Program parse_program(const std::string& source, const std::string& fileName) {
  return Parser(source, fileName).program();
}

ast::AttributeFile parse_attributes(const std::string& source,
                                    const std::string& fileName) {
  return Parser(source, fileName).attribute_file();
}

std::string pretty_print(const ast::Program& program) {
  return Printer().run(program);
}

std::string dump_tree(const ast::Program& program) {
  return Dumper().run(program);
}

}  // namespace psml
