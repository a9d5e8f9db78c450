#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <variant>

#include "psml/interpreter.hpp"
#include "psml/parser.hpp"
#include "psml/query.hpp"
#include "psml/trimesh.hpp"

namespace psml {

namespace {

namespace fs = std::filesystem;
using namespace ast;

struct ShapeListV {
  std::vector<Shape> shapes;
};

struct NodeListV {
  std::vector<SGNode*> nodes;
};

using Value =
    std::variant<double, std::vector<double>, std::string, ShapeListV, NodeListV>;

const char* value_type(const Value& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "array";
    case 2: return "string";
    case 3: return "shape";
    case 4: return "terminal set";
  }
  return "?";
}

double as_number(const Value& v, const std::string& what) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw RuntimeError("type-error", what + " must be a number, got " + value_type(v));
}

const std::vector<double>& as_array(const Value& v, const std::string& what) {
  if (auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw RuntimeError("type-error", what + " must be an array, got " + value_type(v));
}

bool truthy(const Value& v, const std::string& what) {
  return as_number(v, what) != 0.0;
}

struct Env {
  std::map<std::string, Value> vars;
  Env* parent = nullptr;

  explicit Env(Env* p = nullptr) : parent(p) {}

  Value* find(const std::string& name) {
    for (Env* e = this; e; e = e->parent) {
      auto it = e->vars.find(name);
      if (it != e->vars.end()) return &it->second;
    }
    return nullptr;
  }

  void define(const std::string& name, Value v) { vars[name] = std::move(v); }
};

std::string dir_of(const std::string& path) {
  fs::path p(path);
  auto parent = p.parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("io-error", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::set<std::string>& appearance_keys() {
  static const std::set<std::string> kKeys = {
      "color",    "material",  "ambient", "emissive",   "diffuse",
      "specular", "shininess", "bump",    "bumpmap",    "bumpweight",
      "texture",  "transparency"};
  return kKeys;
}

// Flattens an identifier / member chain to its dotted spelling
// (useAttributes(brick.properties, sand), I(conicfrustum, ...)).
bool flatten_name(const Expr& e, std::string& out) {
  if (e.kind == Expr::Kind::ident) {
    out = e.text;
    return true;
  }
  if (e.kind == Expr::Kind::member) {
    std::string base;
    if (!flatten_name(*e.args[0], base)) return false;
    out = base + "." + e.text;
    return true;
  }
  if (e.kind == Expr::Kind::string) {
    out = e.text;
    return true;
  }
  return false;
}

class Interp {
 public:
  explicit Interp(const RunOptions& opts) : opts_(opts), rng_(opts.seed) {}

  RunResult run(const std::string& source, const std::string& fileName) {
    searchDirs_.push_back(dir_of(fileName));
    for (const auto& d : opts_.importDirs) searchDirs_.push_back(d);
    attrDirs_.push_back(dir_of(fileName));
    for (const auto& d : opts_.attrDirs) attrDirs_.push_back(d);

    const Program& entry = register_program(parse_program(source, fileName));
    const Method* mainMethod = nullptr;
    for (const auto& m : entry.methods)
      if (m.isMain) mainMethod = &m;
    if (!mainMethod)
      throw RuntimeError("missing-main", "grammar has no main method");

    root_ = std::make_unique<SGNode>();
    root_->shape = make_primitive(PrimitiveKind::box, {1.0, 1.0, 1.0});

    MethodCtx ctx;
    ctx.prog = &entry;
    ctx.myShape = root_->shape;
    ctx.methodNode = root_.get();
    Env env;
    bind_fields(entry, ctx, env);
    exec_body(mainMethod->body, ctx, env);

    RunResult res;
    walk_tree(*root_, [&](const SGNode& n) {
      if (!n.terminal) return;
      if (n.shape.isVoid) {
        res.voidCount += 1;
      } else {
        res.terminalCount += 1;
        res.totalVolume += shape_volume(n.shape);
      }
    });
    res.root = std::move(root_);
    return res;
  }

  std::string check(const std::string& entryFile) {
    searchDirs_.push_back(dir_of(entryFile));
    for (const auto& d : opts_.importDirs) searchDirs_.push_back(d);
    const Program& entry =
        register_program(parse_program(read_file(entryFile), entryFile));
    (void)entry;
    int ruleCount = 0, blockCount = 0, methodCount = 0;
    for (const auto& name : loadOrder_) {
      const Program& p = programs_.at(name);
      for (const auto& m : p.methods) {
        ++methodCount;
        std::vector<const RulesBlock*> blocks;
        collect_blocks(m.body, blocks);
        for (const auto* b : blocks) {
          ++blockCount;
          ruleCount += static_cast<int>(b->rules.size());
          check_block(p, *b);
        }
      }
    }
    std::ostringstream out;
    out << "OK: " << entry.grammarName << " (" << loadOrder_.size()
        << " grammar" << (loadOrder_.size() == 1 ? "" : "s") << ", "
        << methodCount << " methods, " << blockCount << " rules blocks, "
        << ruleCount << " rules)";
    return out.str();
  }

 private:
  struct MethodCtx {
    const Program* prog = nullptr;
    Shape myShape;
    SGNode* methodNode = nullptr;
    const Shape* scope = nullptr;  // predecessor of the rule being applied
  };

  struct AttrFrame {
    std::map<std::string, AttrValue> entries;
  };

  struct ChainOut {
    std::vector<Shape> shapes;
    bool produced = false;    // any I()
    bool splitUsed = false;   // split or repeat ended the chain
    bool repeatUsed = false;
    bool voidUsed = false;
    int attrFrames = 0;
  };

  // ---- program loading ----

  const Program& register_program(Program prog) {
    std::string name = prog.grammarName;
    auto [it, fresh] = programs_.emplace(name, std::move(prog));
    if (!fresh) return it->second;
    loadOrder_.push_back(name);
    for (const auto& imp : it->second.imports) load_import(imp);
    return it->second;
  }

  void load_import(const std::string& name) {
    if (programs_.count(name)) return;
    for (const auto& dir : searchDirs_) {
      fs::path candidate = fs::path(dir) / (name + ".psm");
      std::error_code ec;
      if (fs::exists(candidate, ec)) {
        register_program(
            parse_program(read_file(candidate.string()), candidate.string()));
        return;
      }
    }
    throw RuntimeError("unresolved-import",
                       "cannot find imported grammar '" + name + "'");
  }

  // Own methods first, then other grammars in load order.
  const Method* find_method(const Program& from, const std::string& name,
                            const Program** owner) {
    for (const auto& m : from.methods) {
      if (!m.isMain && m.name == name) {
        *owner = &from;
        return &m;
      }
    }
    for (const auto& progName : loadOrder_) {
      const Program& p = programs_.at(progName);
      if (&p == &from) continue;
      for (const auto& m : p.methods) {
        if (!m.isMain && m.name == name) {
          *owner = &p;
          return &m;
        }
      }
    }
    return nullptr;
  }

  const AttributeFile& load_attr_file(const std::string& ref) {
    auto it = attrFiles_.find(ref);
    if (it != attrFiles_.end()) return it->second;
    for (const auto& dir : attrDirs_) {
      fs::path candidate = fs::path(dir) / ref;
      std::error_code ec;
      if (fs::exists(candidate, ec)) {
        AttributeFile f =
            parse_attributes(read_file(candidate.string()), candidate.string());
        return attrFiles_.emplace(ref, std::move(f)).first->second;
      }
    }
    throw RuntimeError("unresolved-attribute-file",
                       "cannot find attribute file '" + ref + "'");
  }

  // ---- static validation ----

  static void collect_blocks(const std::vector<StmtPtr>& body,
                             std::vector<const RulesBlock*>& out) {
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::rules:
          out.push_back(&s->rules);
          break;
        case Stmt::Kind::if_else:
          collect_blocks(s->body, out);
          collect_blocks(s->elseBody, out);
          break;
        case Stmt::Kind::for_loop:
        case Stmt::Kind::while_loop:
        case Stmt::Kind::block:
          collect_blocks(s->body, out);
          break;
        default:
          break;
      }
    }
  }

  void check_block(const Program& prog, const RulesBlock& block) {
    std::set<std::string> predecessors;
    for (const auto& r : block.rules) predecessors.insert(r.predecessor);
    for (const auto& r : block.rules) {
      for (const auto& s : r.successors) {
        if (!s.isCall && s.symbol == "terminal") continue;
        if (!s.isCall && predecessors.count(s.symbol)) continue;
        const Program* owner = nullptr;
        if (find_method(prog, s.symbol, &owner)) continue;
        throw ParseError(prog.sourceFile, s.line, s.col,
                         "successor '" + s.symbol +
                             "' has no rule in this block and names no method");
      }
    }
  }

  // ---- execution ----

  void bind_fields(const Program& prog, MethodCtx& ctx, Env& env) {
    for (const auto& f : prog.fields) exec_stmt(*f, ctx, env);
  }

  void exec_body(const std::vector<StmtPtr>& body, MethodCtx& ctx, Env& env) {
    for (const auto& s : body) exec_stmt(*s, ctx, env);
  }

  void exec_stmt(const Stmt& s, MethodCtx& ctx, Env& env) {
    switch (s.kind) {
      case Stmt::Kind::decl:
        for (const auto& [name, init] : s.declarators) {
          Value v = init ? eval(*init, ctx, env) : default_value(s.declType);
          env.define(name, std::move(v));
        }
        break;
      case Stmt::Kind::assign: {
        Value* slot = env.find(s.target);
        if (!slot)
          throw RuntimeError("undefined-variable",
                             "assignment to undefined variable '" + s.target + "'");
        if (s.targetIndex) {
          auto* arr = std::get_if<std::vector<double>>(slot);
          if (!arr)
            throw RuntimeError("type-error",
                               "'" + s.target + "' is not an array");
          int idx = static_cast<int>(eval_num(*s.targetIndex, ctx, env, "index"));
          if (idx < 0 || idx >= static_cast<int>(arr->size()))
            throw RuntimeError("index-out-of-range",
                               "index " + std::to_string(idx) + " out of range");
          (*arr)[static_cast<size_t>(idx)] =
              eval_num(*s.value, ctx, env, "element value");
        } else {
          *slot = eval(*s.value, ctx, env);
        }
        break;
      }
      case Stmt::Kind::expr:
        eval(*s.expr, ctx, env);
        break;
      case Stmt::Kind::if_else: {
        Env inner(&env);
        if (truthy(eval(*s.value, ctx, env), "if condition"))
          exec_body(s.body, ctx, inner);
        else
          exec_body(s.elseBody, ctx, inner);
        break;
      }
      case Stmt::Kind::for_loop: {
        Env inner(&env);
        if (s.forInit) exec_stmt(*s.forInit, ctx, inner);
        long guard = 0;
        while (!s.value || truthy(eval(*s.value, ctx, inner), "for condition")) {
          Env bodyEnv(&inner);
          exec_body(s.body, ctx, bodyEnv);
          if (s.forUpdate) exec_stmt(*s.forUpdate, ctx, inner);
          if (++guard > 100000000L)
            throw RuntimeError("loop-limit", "for loop exceeded iteration limit");
        }
        break;
      }
      case Stmt::Kind::while_loop: {
        long guard = 0;
        while (truthy(eval(*s.value, ctx, env), "while condition")) {
          Env bodyEnv(&env);
          exec_body(s.body, ctx, bodyEnv);
          if (++guard > 100000000L)
            throw RuntimeError("loop-limit", "while loop exceeded iteration limit");
        }
        break;
      }
      case Stmt::Kind::block: {
        Env inner(&env);
        exec_body(s.body, ctx, inner);
        break;
      }
      case Stmt::Kind::rules:
        run_rules_block(s.rules, ctx, env);
        break;
    }
  }

  Value default_value(const std::string& type) {
    if (type == "float") return 0.0;
    if (type == "float[]") return std::vector<double>{};
    if (type == "String") return std::string();
    if (type == "Shape" || type == "Shape[]") return ShapeListV{};
    if (type == "String[]") return std::string();
    return 0.0;
  }

  void run_rules_block(const RulesBlock& block, MethodCtx& ctx, Env& env) {
    if (block.rules.empty())
      throw RuntimeError("empty-rules-block", "rules block has no rules");
    const std::string& axiomSym = block.rules.front().predecessor;

    std::vector<Shape> initials;
    if (Value* v = env.find(axiomSym)) {
      if (auto* sl = std::get_if<ShapeListV>(v)) {
        for (const Shape& s : sl->shapes)
          initials.push_back(s.hasMesh() ? bounding_box(s, opts_.segments) : s);
      } else if (auto* nl = std::get_if<NodeListV>(v)) {
        for (SGNode* n : nl->nodes)
          initials.push_back(n->shape.hasMesh()
                                 ? bounding_box(n->shape, opts_.segments)
                                 : n->shape);
      } else {
        throw RuntimeError("type-error",
                           "rules block start symbol '" + axiomSym +
                               "' is bound to a non-shape value");
      }
      if (initials.empty()) return;  // nothing to derive from
    } else {
      initials.push_back(ctx.myShape);
    }

    std::vector<SGNode*> roots;
    for (const Shape& init : initials) {
      SGNode* node = ctx.methodNode->add_child(axiomSym, init);
      derive(node, block, ctx, env);
      roots.push_back(node);
    }
    if (!block.label.empty()) env.define(block.label, NodeListV{roots});
  }

  void derive(SGNode* node, const RulesBlock& block, MethodCtx& ctx, Env& env) {
    if (++depth_ > opts_.depthLimit)
      throw RuntimeError("derivation-depth-exceeded",
                         "derivation exceeded depth limit of " +
                             std::to_string(opts_.depthLimit));
    const Rule* chosen = nullptr;
    for (const auto& r : block.rules) {
      if (r.predecessor != node->symbol) continue;
      if (!r.condition) {
        chosen = &r;
        break;
      }
      const Shape* prevScope = ctx.scope;
      ctx.scope = &node->shape;
      bool ok = truthy(eval(*r.condition, ctx, env), "rule condition");
      ctx.scope = prevScope;
      if (ok) {
        chosen = &r;
        break;
      }
    }
    if (!chosen)
      throw RuntimeError("no-applicable-rule",
                         "no applicable rule for '" + node->symbol + "'");
    apply_rule(node, *chosen, block, ctx, env);
    --depth_;
  }

  void apply_rule(SGNode* node, const Rule& rule, const RulesBlock& block,
                  MethodCtx& ctx, Env& env) {
    const Shape* prevScope = ctx.scope;
    ctx.scope = &node->shape;
    ChainOut chain;
    try {
      chain = eval_chain(rule, node->shape, ctx, env);
    } catch (...) {
      ctx.scope = prevScope;
      throw;
    }
    ctx.scope = prevScope;

    const auto& succ = rule.successors;
    auto where = [&] {
      return " (rule '" + rule.predecessor + "' at line " +
             std::to_string(rule.line) + ")";
    };
    if (succ.empty())
      throw RuntimeError("successor-arity-mismatch",
                         "rule has no successors" + where());

    if (!chain.repeatUsed && succ.size() == 1 && !succ[0].isCall &&
        succ[0].symbol == "terminal" && chain.shapes.size() == 1) {
      node->shape = chain.shapes[0];
      node->terminal = true;
    } else if (chain.repeatUsed) {
      for (size_t i = 0; i < chain.shapes.size(); ++i)
        spawn(node, succ[i % succ.size()], chain.shapes[i], block, ctx, env);
    } else {
      if (chain.shapes.size() != succ.size())
        throw RuntimeError("successor-arity-mismatch",
                           "chain produced " +
                               std::to_string(chain.shapes.size()) +
                               " shapes for " + std::to_string(succ.size()) +
                               " successors" + where());
      for (size_t i = 0; i < succ.size(); ++i)
        spawn(node, succ[i], chain.shapes[i], block, ctx, env);
    }

    for (int i = 0; i < chain.attrFrames; ++i) attrStack_.pop_back();
  }

  void spawn(SGNode* parent, const Successor& succ, const Shape& shape,
             const RulesBlock& block, MethodCtx& ctx, Env& env) {
    if (succ.isCall) {
      if (succ.symbol == "terminal")
        throw RuntimeError("syntax-misuse", "'terminal' is not callable");
      std::vector<Value> args;
      const Shape* prevScope = ctx.scope;
      ctx.scope = &parent->shape;
      for (const auto& a : succ.args) args.push_back(eval(*a, ctx, env));
      ctx.scope = prevScope;
      invoke_method(succ.symbol, std::move(args), shape, parent, ctx);
      return;
    }
    if (succ.symbol == "terminal") {
      SGNode* child = parent->add_child(parent->symbol, shape);
      child->terminal = true;
      return;
    }
    bool hasRule = false;
    for (const auto& r : block.rules)
      if (r.predecessor == succ.symbol) {
        hasRule = true;
        break;
      }
    if (hasRule) {
      SGNode* child = parent->add_child(succ.symbol, shape);
      derive(child, block, ctx, env);
      return;
    }
    const Program* owner = nullptr;
    if (find_method(*ctx.prog, succ.symbol, &owner)) {
      invoke_method(succ.symbol, {}, shape, parent, ctx);
      return;
    }
    throw RuntimeError("no-applicable-rule",
                       "successor '" + succ.symbol +
                           "' has no rule in this block and names no method");
  }

  void invoke_method(const std::string& name, std::vector<Value> args,
                     const Shape& input, SGNode* attachTo, MethodCtx& caller) {
    const Program* owner = nullptr;
    const Method* method = find_method(*caller.prog, name, &owner);
    if (!method)
      throw RuntimeError("unknown-method", "no method named '" + name + "'");
    if (args.size() != method->params.size())
      throw RuntimeError("method-argument-mismatch",
                         "method '" + name + "' expects " +
                             std::to_string(method->params.size()) +
                             " arguments, got " + std::to_string(args.size()));
    if (++depth_ > opts_.depthLimit)
      throw RuntimeError("derivation-depth-exceeded",
                         "derivation exceeded depth limit of " +
                             std::to_string(opts_.depthLimit));

    SGNode* methodNode = attachTo->add_child(name, input);
    MethodCtx ctx;
    ctx.prog = owner;
    ctx.myShape = input;
    ctx.methodNode = methodNode;
    Env env;
    for (size_t i = 0; i < args.size(); ++i) {
      const Param& p = method->params[i];
      if (p.type == "float") as_number(args[i], "argument '" + p.name + "'");
      env.define(p.name, std::move(args[i]));
    }
    bind_fields(*owner, ctx, env);
    exec_body(method->body, ctx, env);
    --depth_;
  }

  // ---- rule function chains ----

  ChainOut eval_chain(const Rule& rule, const Shape& predecessor, MethodCtx& ctx,
                      Env& env) {
    ChainOut out;
    struct PendOp {
      char kind;
      Eigen::Vector3d v;
    };
    std::vector<PendOp> pending;

    auto apply_pending = [&](Shape& s) {
      for (const auto& op : pending) {
        if (op.kind == 't') apply_translate(s, op.v.x(), op.v.y(), op.v.z());
        else if (op.kind == 'r') apply_rotate(s, op.v.x(), op.v.y(), op.v.z());
        else apply_scale(s, op.v.x(), op.v.y(), op.v.z());
      }
      pending.clear();
    };

    auto where = [&](const FuncCall& f) {
      return " in '" + f.name + "' at line " + std::to_string(f.line);
    };

    for (const auto& f : rule.functions) {
      bool geometric = f.name == "I" || f.name == "split" || f.name == "repeat" ||
                       f.name == "T" || f.name == "R" || f.name == "S";
      if (out.splitUsed && geometric)
        throw RuntimeError("split-not-terminal",
                           "split/repeat must be the last geometric operation "
                           "of a chain" + where(f));

      if (f.name == "T" || f.name == "R" || f.name == "S") {
        if (f.args.size() != 3)
          throw RuntimeError("arity-mismatch",
                             f.name + "() takes 3 arguments" + where(f));
        Eigen::Vector3d v(eval_num(*f.args[0], ctx, env, "transform argument"),
                          eval_num(*f.args[1], ctx, env, "transform argument"),
                          eval_num(*f.args[2], ctx, env, "transform argument"));
        pending.push_back({static_cast<char>(std::tolower(f.name[0])), v});
      } else if (f.name == "I") {
        if (f.args.size() != 2)
          throw RuntimeError("arity-mismatch",
                             "I() takes a kind and a size array" + where(f));
        std::string kind;
        if (!flatten_name(*f.args[0], kind))
          throw RuntimeError("type-error", "bad shape kind" + where(f));
        for (auto& c : kind)
          if (c == '_') c = '-';
        std::vector<double> params = eval_array(*f.args[1], ctx, env);
        Shape s = make_primitive(kind, params);
        s.appearance = predecessor.appearance;
        s.isVoid = predecessor.isVoid;
        apply_pending(s);
        out.shapes.push_back(std::move(s));
        out.produced = true;
      } else if (f.name == "split" || f.name == "repeat") {
        bool isRepeat = f.name == "repeat";
        size_t needed = isRepeat ? 3 : 2;
        if (f.args.size() != needed && !(isRepeat && f.args.size() == 2))
          throw RuntimeError("arity-mismatch",
                             f.name + "() takes axis, sizes" +
                                 std::string(isRepeat ? ", offset" : "") +
                                 where(f));
        std::string axisName;
        if (!flatten_name(*f.args[0], axisName))
          throw RuntimeError("axis-not-in-coordinate-system",
                             "bad axis argument" + where(f));
        auto axis = axis_from_name(axisName);
        if (!axis)
          throw RuntimeError("axis-not-in-coordinate-system",
                             "unknown axis '" + axisName + "'" + where(f));
        std::vector<double> sizes = eval_array(*f.args[1], ctx, env);
        Shape target;
        if (!out.shapes.empty()) {
          target = out.shapes.back();
          out.shapes.pop_back();
        } else {
          target = predecessor;
        }
        apply_pending(target);
        std::vector<Shape> pieces;
        if (isRepeat) {
          double offset = f.args.size() == 3
                              ? eval_num(*f.args[2], ctx, env, "repeat offset")
                              : 0.0;
          pieces = repeat_shape(target, *axis, sizes, offset);
          out.repeatUsed = true;
        } else {
          pieces = split_shape(target, *axis, sizes);
        }
        for (auto& p : pieces) out.shapes.push_back(std::move(p));
        out.splitUsed = true;
      } else if (f.name == "appearance") {
        if (f.args.size() != 2)
          throw RuntimeError("arity-mismatch",
                             "appearance() takes a type and a value" + where(f));
        std::string type;
        if (!flatten_name(*f.args[0], type) || !appearance_keys().count(type))
          throw RuntimeError("unknown-appearance-type",
                             "unknown appearance attribute '" + type + "'" +
                                 where(f));
        AppearanceValue av = appearance_value(*f.args[1], ctx, env);
        if (out.shapes.empty()) out.shapes.push_back(predecessor);
        for (auto& s : out.shapes) s.appearance.set(type, av);
      } else if (f.name == "useAttributes") {
        if (f.args.size() != 2)
          throw RuntimeError("arity-mismatch",
                             "useAttributes() takes a file and a group" +
                                 where(f));
        std::string fileRef, group;
        if (!flatten_name(*f.args[0], fileRef) ||
            !flatten_name(*f.args[1], group))
          throw RuntimeError("type-error",
                             "bad useAttributes argument" + where(f));
        auto ov = opts_.attrGroupOverrides.find(group);
        if (ov != opts_.attrGroupOverrides.end()) group = ov->second;
        const AttributeFile& file = load_attr_file(fileRef);
        const AttributeGroup* found = nullptr;
        for (const auto& g : file.groups)
          if (g.name == group) found = &g;
        if (!found)
          throw RuntimeError("unknown-attribute-group",
                             "attribute file '" + fileRef +
                                 "' has no group '" + group + "'");
        AttrFrame frame;
        for (const auto& [k, v] : found->entries) frame.entries[k] = v;
        attrStack_.push_back(std::move(frame));
        ++out.attrFrames;
      } else if (f.name == "void") {
        if (!f.args.empty())
          throw RuntimeError("arity-mismatch", "void() takes no arguments" + where(f));
        out.voidUsed = true;
      } else {
        throw RuntimeError("unknown-rule-function",
                           "unknown rule function '" + f.name + "'" + where(f));
      }
    }

    if (out.shapes.empty()) {
      out.shapes.push_back(predecessor);
      apply_pending(out.shapes.back());
    } else if (!pending.empty()) {
      apply_pending(out.shapes.back());
    }

    if (out.voidUsed) {
      if (out.produced || out.splitUsed)
        throw RuntimeError("void-with-geometry",
                           "void() cannot be combined with geometry-producing "
                           "functions (rule '" + rule.predecessor + "' at line " +
                               std::to_string(rule.line) + ")");
      for (auto& s : out.shapes) s.isVoid = true;
    }
    return out;
  }

  // Bare words whose root identifier is not bound act as string literals
  // (appearance(texture, rock.jpg)); everything else evaluates normally.
  bool name_resolvable(const Expr& e, Env& env) {
    const Expr* root = &e;
    while (root->kind == Expr::Kind::member) root = root->args[0].get();
    if (root->kind != Expr::Kind::ident) return true;
    return root->text == "myShape" || root->text == "scope" ||
           root->text == "Math" || env.find(root->text) != nullptr;
  }

  AppearanceValue appearance_value(const Expr& e, MethodCtx& ctx, Env& env) {
    AppearanceValue av;
    if ((e.kind == Expr::Kind::ident || e.kind == Expr::Kind::member) &&
        !name_resolvable(e, env)) {
      std::string dotted;
      flatten_name(e, dotted);
      av.isString = true;
      av.str = dotted;
      return av;
    }
    Value v = eval(e, ctx, env);
    if (auto* d = std::get_if<double>(&v)) {
      av.nums = {*d};
    } else if (auto* arr = std::get_if<std::vector<double>>(&v)) {
      av.nums = *arr;
    } else if (auto* s = std::get_if<std::string>(&v)) {
      av.isString = true;
      av.str = *s;
    } else {
      throw RuntimeError("type-error", "bad appearance value");
    }
    return av;
  }

  // ---- expressions ----

  double eval_num(const Expr& e, MethodCtx& ctx, Env& env, const std::string& what) {
    return as_number(eval(e, ctx, env), what);
  }

  std::vector<double> eval_array(const Expr& e, MethodCtx& ctx, Env& env) {
    Value v = eval(e, ctx, env);
    if (auto* arr = std::get_if<std::vector<double>>(&v)) return *arr;
    if (auto* d = std::get_if<double>(&v)) return {*d};
    throw RuntimeError("type-error",
                       std::string("expected an array, got ") + value_type(v));
  }

  const Shape& single_shape(const Value& v, const std::string& what) {
    if (auto* sl = std::get_if<ShapeListV>(&v)) {
      if (sl->shapes.size() == 1) return sl->shapes[0];
      throw RuntimeError("type-error",
                         what + " needs exactly one shape, got " +
                             std::to_string(sl->shapes.size()));
    }
    if (auto* nl = std::get_if<NodeListV>(&v)) {
      if (nl->nodes.size() == 1) return nl->nodes[0]->shape;
      throw RuntimeError("type-error",
                         what + " needs exactly one shape, got " +
                             std::to_string(nl->nodes.size()));
    }
    throw RuntimeError("type-error", what + " expects a shape, got " + value_type(v));
  }

  Value eval(const Expr& e, MethodCtx& ctx, Env& env) {
    switch (e.kind) {
      case Expr::Kind::number:
        return e.num;
      case Expr::Kind::string:
        return e.text;
      case Expr::Kind::ident: {
        if (e.text == "myShape") return ShapeListV{{ctx.myShape}};
        if (e.text == "scope") {
          if (!ctx.scope)
            throw RuntimeError("scope-outside-rule",
                               "'scope' used outside a rule");
          return ShapeListV{{*ctx.scope}};
        }
        if (Value* v = env.find(e.text)) return *v;
        throw RuntimeError("undefined-variable",
                           "undefined variable '" + e.text + "' at line " +
                               std::to_string(e.line));
      }
      case Expr::Kind::attr_ref: {
        for (auto it = attrStack_.rbegin(); it != attrStack_.rend(); ++it) {
          auto found = it->entries.find(e.text);
          if (found != it->entries.end()) {
            if (found->second.isString) return found->second.str;
            return found->second.num;
          }
        }
        throw RuntimeError("unresolved-attribute",
                           "no attribute '" + e.text +
                               "' in scope at line " + std::to_string(e.line));
      }
      case Expr::Kind::array: {
        std::vector<double> out;
        for (const auto& el : e.args)
          out.push_back(eval_num(*el, ctx, env, "array element"));
        return out;
      }
      case Expr::Kind::unary: {
        double v = eval_num(*e.args[0], ctx, env, "operand");
        return e.text == "-" ? -v : (v == 0.0 ? 1.0 : 0.0);
      }
      case Expr::Kind::binary:
        return eval_binary(e, ctx, env);
      case Expr::Kind::member:
        return eval_member(e, ctx, env);
      case Expr::Kind::call:
        return eval_call(e, ctx, env);
      case Expr::Kind::method_call:
        return eval_method_call(e, ctx, env);
      case Expr::Kind::index: {
        Value av = eval(*e.args[0], ctx, env);
        const std::vector<double>& arr = as_array(av, "indexed value");
        int idx = static_cast<int>(eval_num(*e.args[1], ctx, env, "index"));
        if (idx < 0 || idx >= static_cast<int>(arr.size()))
          throw RuntimeError("index-out-of-range",
                             "index " + std::to_string(idx) +
                                 " out of range for array of " +
                                 std::to_string(arr.size()));
        return arr[static_cast<size_t>(idx)];
      }
      case Expr::Kind::instance_of: {
        Value tv = eval(*e.args[0], ctx, env);
        const Shape& s = single_shape(tv, "instanceof");
        std::string cls = e.text;
        const std::string prefix = "Shape3D.";
        if (cls.rfind(prefix, 0) == 0) cls = cls.substr(prefix.size());
        return instance_of(s, cls) ? 1.0 : 0.0;
      }
    }
    throw RuntimeError("internal-error", "unhandled expression");
  }

  Value eval_binary(const Expr& e, MethodCtx& ctx, Env& env) {
    const std::string& op = e.text;
    if (op == "&&") {
      if (!truthy(eval(*e.args[0], ctx, env), "operand")) return 0.0;
      return truthy(eval(*e.args[1], ctx, env), "operand") ? 1.0 : 0.0;
    }
    if (op == "||") {
      if (truthy(eval(*e.args[0], ctx, env), "operand")) return 1.0;
      return truthy(eval(*e.args[1], ctx, env), "operand") ? 1.0 : 0.0;
    }
    Value lv = eval(*e.args[0], ctx, env);
    Value rv = eval(*e.args[1], ctx, env);
    if (op == "+" && (std::holds_alternative<std::string>(lv) ||
                      std::holds_alternative<std::string>(rv))) {
      auto str = [](const Value& v) -> std::string {
        if (auto* s = std::get_if<std::string>(&v)) return *s;
        std::ostringstream os;
        os << std::get<double>(v);
        return os.str();
      };
      return str(lv) + str(rv);
    }
    if ((op == "==" || op == "!=") && std::holds_alternative<std::string>(lv) &&
        std::holds_alternative<std::string>(rv)) {
      bool eq = std::get<std::string>(lv) == std::get<std::string>(rv);
      return ((op == "==") == eq) ? 1.0 : 0.0;
    }
    double a = as_number(lv, "operand");
    double b = as_number(rv, "operand");
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "/") return a / b;  // IEEE semantics, no error on zero
    if (op == "%") return std::fmod(a, b);
    if (op == "<") return a < b ? 1.0 : 0.0;
    if (op == ">") return a > b ? 1.0 : 0.0;
    if (op == "<=") return a <= b ? 1.0 : 0.0;
    if (op == ">=") return a >= b ? 1.0 : 0.0;
    if (op == "==") return a == b ? 1.0 : 0.0;
    if (op == "!=") return a != b ? 1.0 : 0.0;
    throw RuntimeError("internal-error", "unhandled operator '" + op + "'");
  }

  Value eval_member(const Expr& e, MethodCtx& ctx, Env& env) {
    const Expr& target = *e.args[0];
    if (target.kind == Expr::Kind::ident && target.text == "Math") {
      if (e.text == "PI") return 3.14159265358979323846;
      if (e.text == "E") return 2.71828182845904523536;
      throw RuntimeError("unknown-member", "unknown constant Math." + e.text);
    }
    Value tv = eval(target, ctx, env);
    const Shape& s = single_shape(tv, "member access");
    auto v = scope_value(s, e.text);
    if (!v)
      throw RuntimeError("unknown-member",
                         "shape has no member '" + e.text + "' at line " +
                             std::to_string(e.line));
    return *v;
  }

  Value eval_call(const Expr& e, MethodCtx& ctx, Env& env) {
    auto pattern_arg = [&](const char* what) -> std::string {
      if (e.args.size() != 1)
        throw RuntimeError("arity-mismatch",
                           std::string(what) + "() takes one path argument");
      Value v = eval(*e.args[0], ctx, env);
      if (auto* s = std::get_if<std::string>(&v)) return *s;
      throw RuntimeError("type-error",
                         std::string(what) + "() takes a string path");
    };
    if (e.text == "instances") {
      std::string pat = pattern_arg("instances");
      return ShapeListV{instances_query(*ctx.methodNode, *root_, pat)};
    }
    if (e.text == "terminals") {
      std::string pat = pattern_arg("terminals");
      return NodeListV{terminals_query(*ctx.methodNode, *root_, pat)};
    }
    throw RuntimeError("unknown-function",
                       "unknown function '" + e.text + "' at line " +
                           std::to_string(e.line));
  }

  Value eval_method_call(const Expr& e, MethodCtx& ctx, Env& env) {
    const Expr& target = *e.args[0];
    if (target.kind == Expr::Kind::ident && target.text == "Math")
      return math_call(e, ctx, env);

    Value tv = eval(target, ctx, env);
    if (e.text == "volume") {
      if (e.args.size() != 1)
        throw RuntimeError("arity-mismatch", "volume() takes no arguments");
      double total = 0.0;
      if (auto* sl = std::get_if<ShapeListV>(&tv)) {
        for (const auto& s : sl->shapes) total += shape_volume(s);
      } else if (auto* nl = std::get_if<NodeListV>(&tv)) {
        for (SGNode* n : nl->nodes) total += shape_volume(n->shape);
      } else {
        throw RuntimeError("type-error", "volume() needs a shape collection");
      }
      return total;
    }
    if (e.text == "geometricBoolean") {
      if (e.args.size() != 3)
        throw RuntimeError("arity-mismatch",
                           "geometricBoolean() takes a shape set and an operator");
      Value other = eval(*e.args[1], ctx, env);
      Value opv = eval(*e.args[2], ctx, env);
      auto* ops = std::get_if<std::string>(&opv);
      if (!ops)
        throw RuntimeError("type-error",
                           "geometricBoolean() operator must be a string");
      auto op = op_from_symbol(*ops);
      if (!op)
        throw RuntimeError("unknown-operator",
                           "unknown boolean operator '" + *ops + "'");
      auto set_of = [](Value& v) -> ShapeSet {
        ShapeSet set;
        if (auto* sl = std::get_if<ShapeListV>(&v)) set.copies = &sl->shapes;
        else if (auto* nl = std::get_if<NodeListV>(&v)) set.nodes = &nl->nodes;
        else
          throw RuntimeError("type-error",
                             "geometricBoolean() operands must be shape sets");
        return set;
      };
      ShapeSet a = set_of(tv);
      ShapeSet b = set_of(other);
      std::vector<Shape> produced = geometric_boolean(a, b, *op, opts_.segments);
      if (!a.refs()) return ShapeListV{std::move(produced)};
      return tv;  // mutated references
    }
    throw RuntimeError("unknown-method",
                       "unknown method '." + e.text + "' at line " +
                           std::to_string(e.line));
  }

  Value math_call(const Expr& e, MethodCtx& ctx, Env& env) {
    const std::string& fn = e.text;
    auto arg = [&](size_t i) {
      return eval_num(*e.args[i + 1], ctx, env, "Math." + fn + " argument");
    };
    size_t argc = e.args.size() - 1;
    auto need = [&](size_t n) {
      if (argc != n)
        throw RuntimeError("arity-mismatch",
                           "Math." + fn + "() takes " + std::to_string(n) +
                               " arguments");
    };
    if (fn == "random") {
      need(0);
      // 53-bit mantissa draw; independent of distribution internals.
      return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    }
    if (fn == "sin") { need(1); return std::sin(arg(0)); }
    if (fn == "cos") { need(1); return std::cos(arg(0)); }
    if (fn == "tan") { need(1); return std::tan(arg(0)); }
    if (fn == "atan") { need(1); return std::atan(arg(0)); }
    if (fn == "sqrt") { need(1); return std::sqrt(arg(0)); }
    if (fn == "abs") { need(1); return std::fabs(arg(0)); }
    if (fn == "floor") { need(1); return std::floor(arg(0)); }
    if (fn == "ceil") { need(1); return std::ceil(arg(0)); }
    if (fn == "atan2") { need(2); return std::atan2(arg(0), arg(1)); }
    if (fn == "pow") { need(2); return std::pow(arg(0), arg(1)); }
    if (fn == "min") { need(2); return std::min(arg(0), arg(1)); }
    if (fn == "max") { need(2); return std::max(arg(0), arg(1)); }
    throw RuntimeError("unknown-function", "unknown function Math." + fn);
  }

  RunOptions opts_;
  std::mt19937_64 rng_;
  std::map<std::string, Program> programs_;
  std::vector<std::string> loadOrder_;
  std::map<std::string, AttributeFile> attrFiles_;
  std::vector<AttrFrame> attrStack_;
  std::vector<std::string> searchDirs_;
  std::vector<std::string> attrDirs_;
  std::unique_ptr<SGNode> root_;
  int depth_ = 0;
};

}  // namespace

RunResult run_program(const std::string& entryFile, const RunOptions& options) {
  std::ifstream in(entryFile, std::ios::binary);
  if (!in) throw RuntimeError("io-error", "cannot read '" + entryFile + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Interp(options).run(ss.str(), entryFile);
}

RunResult run_source(const std::string& source, const std::string& fileName,
                     const RunOptions& options) {
  return Interp(options).run(source, fileName);
}

std::string check_program(const std::string& entryFile, const RunOptions& options) {
  return Interp(options).check(entryFile);
}

}  // namespace psml
