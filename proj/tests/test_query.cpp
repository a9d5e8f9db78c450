#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <regex>
#include <set>

#include "psml/interpreter.hpp"
#include "psml/query.hpp"
#include "psml/trimesh.hpp"

using namespace psml;

namespace {

SGNode* add(SGNode* parent, const std::string& symbol, bool terminal = false,
            double size = 1.0) {
  SGNode* n = parent->add_child(symbol, make_primitive("box", {size, size, size}));
  n->terminal = terminal;
  return n;
}

// Reference matcher: the full path must match ".*e1.*/.*e2.*/..." where the
// wildcards may also cross '/' boundaries.
bool regex_match_path(const std::string& path, const std::string& pattern) {
  std::string bodyel, rx = ".*";
  std::string pat = pattern[0] == '/' ? pattern.substr(1) : pattern;
  size_t start = 0;
  bool first = true;
  while (true) {
    size_t slash = pat.find('/', start);
    std::string el = pat.substr(start, slash == std::string::npos
                                           ? std::string::npos
                                           : slash - start);
    if (!first) rx += "/.*";
    rx += el + ".*";
    first = false;
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return std::regex_match(path, std::regex(rx));
}

std::set<const SGNode*> oracle_matches(SGNode& root, const std::string& pattern) {
  std::set<const SGNode*> out;
  walk_tree(root, [&](const SGNode& n) {
    if (n.symbol.empty()) return;
    if (regex_match_path(n.path(), pattern)) out.insert(&n);
  });
  return out;
}

std::set<const SGNode*> as_set(const std::vector<SGNode*>& v) {
  return {v.begin(), v.end()};
}

// Four-level synthetic build: two walls with brick subtrees, one tower.
std::unique_ptr<SGNode> synthetic_tree() {
  auto root = std::make_unique<SGNode>();
  root->shape = make_primitive("box", {1, 1, 1});
  SGNode* axiom = add(root.get(), "Axiom");
  SGNode* wall1 = add(axiom, "wall");
  SGNode* bricks1 = add(wall1, "Bricks");
  add(bricks1, "brick", true, 0.5);
  add(bricks1, "brick", true, 0.5);
  SGNode* seaWall = add(axiom, "seawall");
  SGNode* bricks2 = add(seaWall, "Bricks");
  add(bricks2, "brick", true, 0.4);
  add(bricks2, "space", true, 0.4)->shape.isVoid = true;
  SGNode* tower = add(axiom, "tower");
  SGNode* tb = add(tower, "Bricks");
  add(tb, "brick", true, 0.3);
  return root;
}

} // namespace

TEST_CASE("path elements match distinct ancestry segments as substrings") {
  auto root = synthetic_tree();
  auto& r = *root;

  // "wall/Bricks" also catches seawall by substring, per the regex form
  auto m = resolve_path(r, r, "wall/Bricks");
  auto o = oracle_matches(r, "wall/Bricks");
  CHECK(as_set(m) == o);
  CHECK(m.size() == 6); // two Bricks nodes and their four leaves

  CHECK(as_set(resolve_path(r, r, "Axiom/wall/Bricks/brick")) ==
        oracle_matches(r, "Axiom/wall/Bricks/brick"));
  CHECK(resolve_path(r, r, "Axiom/wall/Bricks/brick").size() == 3);
  CHECK(resolve_path(r, r, "tower").size() == 3);
  CHECK(resolve_path(r, r, "wall/wall").empty()); // one segment cannot serve twice
  CHECK(resolve_path(r, r, "nonexistent").empty());

  // results arrive in pre-order
  std::map<const SGNode*, int> order;
  int tick = 0;
  walk_tree(r, [&](const SGNode& n) { order[&n] = tick++; });
  auto pre = resolve_path(r, r, "Bricks");
  for (size_t i = 1; i < pre.size(); ++i)
    CHECK(order[pre[i - 1]] < order[pre[i]]);
}

TEST_CASE("path matching agrees with the regex oracle on random trees") {
  std::mt19937_64 rng(1234);
  const char* symbols[] = {"wall", "brick", "tower", "seawall", "walkway",
                           "arch", "a", "b", "wa"};
  const char* patterns[] = {"wall",       "wall/brick", "a",
                            "wa/a",       "tower/arch", "b/b",
                            "wall/wa/a",  "seawall",    "arch/arch",
                            "/wall/brick"};
  for (int t = 0; t < 1000; ++t) {
    auto root = std::make_unique<SGNode>();
    root->shape = make_primitive("box", {1, 1, 1});
    std::vector<SGNode*> open = {root.get()};
    int n = 3 + (int)(rng() % 12);
    for (int i = 0; i < n; ++i) {
      SGNode* parent = open[rng() % open.size()];
      SGNode* c = add(parent, symbols[rng() % 9], false);
      open.push_back(c);
    }
    const char* pat = patterns[rng() % 10];
    CAPTURE(t);
    CAPTURE(pat);
    CHECK(as_set(resolve_path(*root, *root, pat)) == oracle_matches(*root, pat));
  }
}

TEST_CASE("leading slash searches from the global root") {
  auto root = synthetic_tree();
  SGNode* towerSubtree = root->children[0]->children[2].get();
  CHECK(resolve_path(*towerSubtree, *root, "wall").empty());
  CHECK(resolve_path(*towerSubtree, *root, "/wall").size() ==
        resolve_path(*root, *root, "wall").size());
  CHECK(resolve_path(*towerSubtree, *root, "brick").size() == 1);
}

TEST_CASE("instances copies shapes, terminals returns deduplicated leaves") {
  auto root = synthetic_tree();
  auto& r = *root;

  // seawall's subtree matches too, and descendants of matches are included
  auto copies = instances_query(r, r, "Axiom/wall/Bricks");
  CHECK(copies.size() == 6);
  // mutating a copy never touches the tree
  apply_translate(copies[0], 100, 0, 0);
  CHECK(root->children[0]->children[0]->children[0]->shape.frame.trans.x() ==
        doctest::Approx(0));

  auto leaves = terminals_query(r, r, "wall");
  CHECK(leaves.size() == 4); // brick, brick, brick, void space
  for (SGNode* n : leaves) CHECK(n->terminal);

  // overlapping matches must not duplicate leaves
  auto leaves2 = terminals_query(r, r, "Bricks");
  CHECK(leaves2.size() == 5);
  CHECK(as_set(leaves2).size() == 5);

  // a matched terminal is its own terminal descendant
  auto self = terminals_query(r, r, "tower/Bricks/brick");
  REQUIRE(self.size() == 1);
  CHECK(self[0]->symbol == "brick");

  CHECK(instances_query(r, r, "nope").empty());
  CHECK(terminals_query(r, r, "nope").empty());
}

TEST_CASE("boolean on copies yields a new detached shape, tree untouched") {
  auto root = synthetic_tree();
  std::vector<Shape> a = {make_primitive("box", {1, 1, 1})};
  Shape shifted = make_primitive("box", {1, 1, 1});
  apply_translate(shifted, 0.5, 0, 0);
  std::vector<Shape> b = {shifted};

  ShapeSet sa{&a, nullptr}, sb{&b, nullptr};
  auto out = geometric_boolean(sa, sb, BooleanOp::intersect, 8);
  REQUIRE(out.size() == 1);
  CHECK(out[0].hasMesh());
  CHECK(shape_volume(out[0]) == doctest::Approx(0.5));

  int liveBefore = 0, liveAfter = 0;
  walk_tree(*synthetic_tree(), [&](const SGNode&) { ++liveBefore; });
  walk_tree(*root, [&](const SGNode&) { ++liveAfter; });
  CHECK(liveBefore == liveAfter);
}

TEST_CASE("boolean with terminal references rewrites leaves in place") {
  // T - copies: the leaf keeps its identity but carries the carved mesh
  auto root = synthetic_tree();
  auto& r = *root;
  SGNode* brick = terminals_query(r, r, "tower")[0];
  brick->shape.appearance.set("diffuse", {false, {1, 0, 0}, ""});
  double before = shape_volume(brick->shape);

  Shape cutter = make_primitive("box", {0.15, 1, 1});
  std::vector<Shape> cut = {cutter};
  std::vector<SGNode*> targets = {brick};
  ShapeSet st{nullptr, &targets}, sc{&cut, nullptr};
  auto out = geometric_boolean(st, sc, BooleanOp::subtract, 8);
  CHECK(out.empty());
  CHECK(brick->shape.hasMesh());
  CHECK(!brick->deleted);
  CHECK(brick->shape.appearance.find("diffuse") != nullptr);
  CHECK(shape_volume(brick->shape) < before);
  CHECK(shape_volume(brick->shape) == doctest::Approx(0.3 * 0.3 * 0.15));
}

TEST_CASE("terminal-terminal union deletes the right operand leaves") {
  auto root = synthetic_tree();
  auto& r = *root;
  auto left = terminals_query(r, r, "Axiom/wall/Bricks");
  auto right = terminals_query(r, r, "tower");
  REQUIRE(left.size() == 4); // seawall leaves ride along, void space included
  REQUIRE(right.size() == 1);
  SGNode* rightLeaf = right[0];

  ShapeSet sl{nullptr, &left}, sr{nullptr, &right};
  geometric_boolean(sl, sr, BooleanOp::unite, 8);
  CHECK(rightLeaf->deleted);
  CHECK(resolve_path(r, r, "tower/Bricks/brick").empty());
  CHECK(!left[0]->deleted);
  CHECK(left[0]->shape.hasMesh());
}

TEST_CASE("terminal-terminal subtraction keeps the right operand") {
  auto root = synthetic_tree();
  auto& r = *root;
  auto left = terminals_query(r, r, "Axiom/wall/Bricks");
  auto right = terminals_query(r, r, "tower");
  double rightVolBefore = shape_volume(right[0]->shape);

  ShapeSet sl{nullptr, &left}, sr{nullptr, &right};
  geometric_boolean(sl, sr, BooleanOp::subtract, 8);
  CHECK(!right[0]->deleted);
  CHECK(shape_volume(right[0]->shape) == doctest::Approx(rightVolBefore));
  CHECK(resolve_path(r, r, "tower/Bricks/brick").size() == 1);
}

TEST_CASE("total terminal volume never grows under subtraction") {
  auto r = run_source(
      "public class T extends ShapeGrammar {\npublic static void main(String[] "
      "args) {\nrules { axiom::I(box, {2, 1, 1}){w}; w::split(x, {1, 1}){a, "
      "b}; a::{terminal}; b::{terminal}; }\nrules { c::T(0.5, 0, 0) I(box, "
      "{1, 1, 1}){cut}; cut::void(){terminal}; }\nShape k = "
      "instances(\"cut\");\nterminals(\"w\").geometricBoolean(k, "
      "\"-\");\n}\n}",
      "T.psm", {});
  double total = 0;
  walk_tree(*r.root, [&](const SGNode& n) {
    if (n.terminal && !n.shape.isVoid) total += shape_volume(n.shape);
  });
  CHECK(total < 2.0);
  CHECK(total == doctest::Approx(1.0)); // the cut removes the overlapped half
}

TEST_CASE("stats group by leaf symbol with volume-descending order") {
  auto root = synthetic_tree();
  auto rows = collect_stats(*root, {});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pattern == "brick");
  CHECK(rows[0].count == 4);
  CHECK(rows[0].volume == doctest::Approx(0.125 + 0.125 + 0.064 + 0.027));
  CHECK(rows[1].pattern == "space"); // voids are reportable
  CHECK(rows[1].count == 1);
}

TEST_CASE("stats with explicit patterns count terminal descendants") {
  auto root = synthetic_tree();
  auto rows = collect_stats(*root, {"wall", "tower", "ghost"});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].pattern == "wall");
  CHECK(rows[0].count == 4);
  CHECK(rows[1].pattern == "tower");
  CHECK(rows[1].count == 1);
  CHECK(rows[1].volume == doctest::Approx(0.027));
  CHECK(rows[2].count == 0);
  CHECK(rows[2].volume == doctest::Approx(0.0));
}

TEST_CASE("queries see neither deleted nodes nor alter later results") {
  auto root = synthetic_tree();
  auto& r = *root;
  auto before = collect_stats(r, {"brick"});
  auto copies = instances_query(r, r, "brick");
  CHECK(copies.size() == 4);
  auto after = collect_stats(r, {"brick"});
  CHECK(before[0].count == after[0].count);
  CHECK(before[0].volume == doctest::Approx(after[0].volume));

  root->children[0]->children[2]->deleted = true; // drop the tower subtree
  CHECK(resolve_path(r, r, "tower").empty());
  CHECK(collect_stats(r, {"brick"})[0].count == 3);
}
