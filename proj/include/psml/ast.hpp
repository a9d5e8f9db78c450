#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace psml::ast {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    number,      // num
    string,      // text
    ident,       // text
    attr_ref,    // text = dotted key without '@'
    array,       // args = elements
    unary,       // text = "-" or "!", args[0]
    binary,      // text = operator, args[0], args[1]
    member,      // args[0].text
    call,        // text(args)           free function, e.g. instances("x")
    method_call, // args[0].text(args[1..])
    index,       // args[0][args[1]]
    instance_of, // args[0] instanceof text (dotted class name)
  };

  Kind kind = Kind::number;
  int line = 0, col = 0;
  double num = 0.0;
  std::string text;
  std::vector<ExprPtr> args;
};

ExprPtr make_expr(Expr::Kind kind, int line, int col);

struct FuncCall {
  std::string name;  // I, T, R, S, split, repeat, appearance, useAttributes, void
  std::vector<ExprPtr> args;
  int line = 0, col = 0;
};

struct Successor {
  std::string symbol;
  bool isCall = false;  // Name(...) invokes a method
  std::vector<ExprPtr> args;
  int line = 0, col = 0;
};

struct Rule {
  std::string predecessor;
  ExprPtr condition;  // null when the condition slot is empty
  std::vector<FuncCall> functions;
  std::vector<Successor> successors;
  int line = 0, col = 0;
};

struct RulesBlock {
  std::string label;  // optional handle, may be empty
  std::vector<Rule> rules;
  int line = 0, col = 0;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
  enum class Kind { decl, assign, expr, if_else, for_loop, while_loop, rules, block };

  Kind kind = Kind::expr;
  int line = 0, col = 0;

  // decl
  std::string declType;  // "float", "float[]", "String", "String[]", "Shape", "Shape[]"
  std::vector<std::pair<std::string, ExprPtr>> declarators;  // name, optional init

  // assign: target[targetIndex] = value
  std::string target;
  ExprPtr targetIndex;  // null for plain assignment
  ExprPtr value;        // assign rhs; if/for/while condition

  ExprPtr expr;  // expression statement

  std::vector<StmtPtr> body;      // then-branch / loop body / block statements
  std::vector<StmtPtr> elseBody;
  StmtPtr forInit;    // decl or assign
  StmtPtr forUpdate;  // assign

  RulesBlock rules;
};

StmtPtr make_stmt(Stmt::Kind kind, int line, int col);

struct Param {
  std::string type;
  std::string name;
};

struct Method {
  std::string name;
  bool isMain = false;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  int line = 0, col = 0;
};

struct Program {
  std::string grammarName;
  std::string baseClass;
  std::vector<std::string> imports;
  std::vector<StmtPtr> fields;  // decl statements
  std::vector<Method> methods;
  std::string sourceFile;
};

struct AttrValue {
  bool isString = false;
  double num = 0.0;
  std::string str;
};

struct AttributeGroup {
  std::string name;
  std::vector<std::pair<std::string, AttrValue>> entries;  // dotted key -> value
  int line = 0, col = 0;
};

struct AttributeFile {
  std::vector<AttributeGroup> groups;
  std::string sourceFile;
};

}  // namespace psml::ast
