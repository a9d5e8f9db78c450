// End-to-end gate over the shipped demos and the core invariants. Each check
// prints one PASS or FAIL line; the process exits nonzero if any check fails.
#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "psml/csg.hpp"
#include "psml/geometry.hpp"
#include "psml/interpreter.hpp"
#include "psml/obj_export.hpp"
#include "psml/query.hpp"
#include "psml/trimesh.hpp"

using namespace psml;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string demo(const std::string& name) {
  return std::string(PSML_DEMO_DIR) + "/" + name;
}

std::string out_dir(const std::string& sub) {
  std::string dir = std::string(PSML_BUILD_DIR) + "/acceptance_out/" + sub;
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct Check {
  bool ok = true;
  std::string note;
  std::vector<std::string> fails;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      fails.push_back(what);
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol))
      expect(false, what + ": got " + fmt(got, 12) + ", want " + fmt(want, 12));
  }
  void rel(double got, double want, double tol, const std::string& what) {
    double e = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    if (!(e <= tol))
      expect(false, what + ": got " + fmt(got, 12) + ", want " + fmt(want, 12) +
                        " (rel err " + fmt(e, 3) + ")");
  }
};

int count_terminals(const SGNode& root, const std::string& symbol, bool voids) {
  int n = 0;
  walk_tree(root, [&](const SGNode& t) {
    if (t.terminal && t.shape.isVoid == voids && t.symbol == symbol) ++n;
  });
  return n;
}

double terminal_volume(const SGNode& root, const std::string& symbol) {
  double v = 0;
  walk_tree(root, [&](const SGNode& t) {
    if (t.terminal && !t.shape.isVoid && t.symbol == symbol)
      v += shape_volume(t.shape);
  });
  return v;
}

// Wall-band thickness of the first terminal with the given symbol and kind.
double band_wall(const SGNode& root, const std::string& symbol, PrimitiveKind kind) {
  double wall = std::numeric_limits<double>::quiet_NaN();
  walk_tree(root, [&](const SGNode& t) {
    if (!t.terminal || t.shape.hasMesh() || t.symbol != symbol) return;
    if (classify(t.shape.desc) != kind) return;
    if (const auto* rv = std::get_if<RevolveDesc>(&t.shape.desc.geo))
      wall = rv->wall;
  });
  return wall;
}

// Closed-form tiling count: pieces of size s offset by -off covering [0, L],
// clipped at the ends, slivers below 1e-9 dropped.
int tiles(double L, double s, double off) {
  int kmin = (int)std::ceil((off + 1e-9) / s) - 1;
  int kmax = (int)std::ceil((L + off - 1e-9) / s) - 1;
  return kmax - kmin + 1;
}

// Brick count for one wall of the brick demo: rows of height bh alternate a
// plain and a half-offset course. Curved walls tile the full turn with an
// angular step taken at the wall's outer radius of 2.
int wall_bricks(double bw, double bh, bool rotary) {
  int rows = tiles(8.0, bh, 0.0);
  double extent = rotary ? 2 * kPi : 4.0;
  double step = rotary ? bw / 2.0 : bw;
  int total = 0;
  for (int i = 0; i < rows; ++i)
    total += tiles(extent, step, i % 2 == 0 ? 0.0 : step / 2);
  return total;
}

Shape random_shape(PrimitiveKind k, std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  switch (k) {
  case PrimitiveKind::box:
  case PrimitiveKind::ramp:
  case PrimitiveKind::tetrahedron:
    return make_primitive(k, {u(0.2, 4), u(0.2, 4), u(0.2, 4)});
  case PrimitiveKind::ramp_frustum_y:
    return make_primitive(k, {u(0.5, 4), u(0.5, 4), u(0.2, 4), u(0.2, 4)});
  case PrimitiveKind::ramp_frustum_x: {
    double w = u(1, 4);
    return make_primitive(k, {w, u(0.2, 4), u(0.2, 4), u(0.1, w * 0.9)});
  }
  case PrimitiveKind::cylinder:
  case PrimitiveKind::cone:
    return make_primitive(k, {u(0.2, 3), u(0.2, 4)});
  case PrimitiveKind::cylinder_sector:
  case PrimitiveKind::cone_sector: {
    double t0 = u(0, 2 * kPi);
    return make_primitive(k, {u(0.2, 3), u(0.2, 4), t0, t0 + u(0.3, 2 * kPi - 0.3)});
  }
  case PrimitiveKind::ring: {
    double ri = u(0.2, 2);
    return make_primitive(k, {ri, ri + u(0.1, 2), u(0.2, 4)});
  }
  case PrimitiveKind::ring_sector: {
    double ri = u(0.2, 2), t0 = u(0, 2 * kPi);
    return make_primitive(k, {ri, ri + u(0.1, 2), u(0.2, 4), t0,
                              t0 + u(0.3, 2 * kPi - 0.3)});
  }
  case PrimitiveKind::conicfrustum:
    return make_primitive(k, {u(0.2, 3), u(0.2, 3), u(0.2, 4)});
  case PrimitiveKind::frustum_sector: {
    double t0 = u(0, 2 * kPi);
    return make_primitive(k, {u(0.2, 3), u(0.2, 3), u(0.2, 4), t0,
                              t0 + u(0.3, 2 * kPi - 0.3)});
  }
  case PrimitiveKind::hollow_frustum: {
    double rt = u(0.5, 3), rb = u(0.5, 3);
    return make_primitive(k, {rt, rb, u(0.2, 4), u(0.05, std::max(rt, rb) * 0.9)});
  }
  case PrimitiveKind::tetra_frustum: {
    double h = u(1, 4);
    return make_primitive(k, {u(0.5, 4), h, u(0.5, 4), u(0.2, h * 0.9)});
  }
  case PrimitiveKind::tetra_frustum_sector: {
    double w = u(1, 4);
    return make_primitive(k, {w, u(0.5, 4), u(0.5, 4), u(0.1, w * 0.9)});
  }
  case PrimitiveKind::sphere:
    return make_primitive(k, {u(0.2, 3)});
  case PrimitiveKind::sphere_shell: {
    double ri = u(0.2, 2);
    return make_primitive(k, {ri, ri + u(0.1, 2)});
  }
  case PrimitiveKind::sphere_wedge: {
    double t0 = u(0, 2 * kPi), p0 = u(0, kPi - 0.4);
    return make_primitive(k, {u(0.2, 3), t0, t0 + u(0.3, 2 * kPi - 0.3), p0,
                              p0 + u(0.2, kPi - p0 - 0.1)});
  }
  }
  return make_primitive(PrimitiveKind::box, {1, 1, 1});
}

const Axis kAllAxes[] = {Axis::x, Axis::y, Axis::z, Axis::r, Axis::theta, Axis::phi};

// --- reference path matcher used by the query check ---

bool regex_match_path(const std::string& path, const std::string& pattern) {
  std::string rx = ".*";
  std::string pat = pattern[0] == '/' ? pattern.substr(1) : pattern;
  size_t start = 0;
  bool first = true;
  while (true) {
    size_t slash = pat.find('/', start);
    std::string el = pat.substr(
        start, slash == std::string::npos ? std::string::npos : slash - start);
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

SGNode* add(SGNode* parent, const std::string& symbol, bool terminal = false,
            double size = 1.0) {
  SGNode* n = parent->add_child(symbol, make_primitive("box", {size, size, size}));
  n->terminal = terminal;
  return n;
}

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

int main() {
  int failures = 0;
  int total = 0;

  auto criterion = [&](const std::string& name,
                       const std::function<void(Check&)>& fn) {
    ++total;
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.fails.push_back(std::string("exception: ") + e.what());
    }
    if (c.ok) {
      std::cout << "PASS " << name;
      if (!c.note.empty()) std::cout << " (" << c.note << ")";
      std::cout << "\n";
    } else {
      ++failures;
      std::cout << "FAIL " << name << ":";
      for (size_t i = 0; i < c.fails.size() && i < 4; ++i)
        std::cout << (i ? "; " : " ") << c.fails[i];
      if (c.fails.size() > 4)
        std::cout << " (+" << c.fails.size() - 4 << " more)";
      std::cout << "\n";
    }
    std::cout.flush();
  };

  criterion("coffee-mug-derivation", [&](Check& c) {
    auto t0 = Clock::now();
    auto r = run_program(demo("CoffeeMug.psm"), RunOptions{});
    double dt = seconds_since(t0);
    c.expect(r.terminalCount == 3,
             "3 visible terminals, got " + std::to_string(r.terminalCount));
    c.expect(r.voidCount == 3,
             "3 void terminals, got " + std::to_string(r.voidCount));
    c.expect(count_terminals(*r.root, "vesselBody", false) == 2,
             "two vesselBody terminals");
    c.expect(count_terminals(*r.root, "handle", false) == 1,
             "one handle terminal");
    double wall = band_wall(*r.root, "handle", PrimitiveKind::ring_sector);
    c.near(wall, 0.4, 1e-6, "handle ring wall thickness");
    c.expect(dt < 1.0, "runtime " + fmt(dt, 3) + " s exceeds 1 s");
    c.note = "3 visible + 3 voids, handle wall " + fmt(wall, 7) + ", " +
             fmt(dt, 3) + " s";
  });

  criterion("coffee-mug-parameter-variants", [&](Check& c) {
    std::string src = slurp(demo("CoffeeMug.psm"));
    struct Variant {
      const char* from;
      const char* to;
      double wall; // expected vessel wall thickness after the change
    } variants[] = {{"t = 0.4", "t = 1", 1.0},
                    {"w_top = 4.5", "w_top = 7", 0.4},
                    {"h = 8.5", "h = 10", 0.4}};
    for (const auto& v : variants) {
      std::string s = src;
      size_t at = s.find(v.from);
      c.expect(at != std::string::npos, std::string("field ") + v.from);
      if (at == std::string::npos) continue;
      s.replace(at, std::string(v.from).size(), v.to);
      auto r = run_source(s, demo("CoffeeMug.psm"), RunOptions{});
      std::string tag = std::string("[") + v.to + "] ";
      c.expect(r.terminalCount == 3, tag + "3 visible terminals");
      c.expect(r.voidCount == 3, tag + "3 void terminals");
      c.expect(count_terminals(*r.root, "vesselBody", false) == 2,
               tag + "two vesselBody terminals");
      c.expect(count_terminals(*r.root, "handle", false) == 1,
               tag + "one handle terminal");
      double wall = band_wall(*r.root, "vesselBody", PrimitiveKind::hollow_frustum);
      c.near(wall, v.wall, 1e-6, tag + "vessel wall tracks t");
    }
    c.note = "t=1, w_top=7, h=10 keep the 3+3 signature; wall follows t";
  });

  criterion("brick-tiling-counts", [&](Check& c) {
    auto t0 = Clock::now();
    auto sand = run_program(demo("Bricks.psm"), RunOptions{});
    RunOptions rockOpt;
    rockOpt.attrGroupOverrides = {{"sand", "rock"}};
    auto rock = run_program(demo("Bricks.psm"), rockOpt);
    double dt = seconds_since(t0);

    int sandGot = count_terminals(*sand.root, "brick", false);
    int rockGot = count_terminals(*rock.root, "brick", false);
    int sandWant = wall_bricks(1.5, 0.6, false) + 2 * wall_bricks(1.5, 0.6, true);
    int rockWant = wall_bricks(0.7, 0.3, false) + 2 * wall_bricks(0.7, 0.3, true);
    c.expect(sandGot == sandWant, "sand bricks: got " + std::to_string(sandGot) +
                                      ", oracle " + std::to_string(sandWant));
    c.expect(rockGot == rockWant, "rock bricks: got " + std::to_string(rockGot) +
                                      ", oracle " + std::to_string(rockWant));
    c.expect(rockGot > sandGot, "smaller bricks must tile more courses");
    c.expect(dt < 5.0, "runtime " + fmt(dt, 3) + " s exceeds 5 s");
    c.note = "sand " + std::to_string(sandGot) + ", rock " +
             std::to_string(rockGot) + ", oracle agrees, " + fmt(dt, 3) + " s";
  });

  criterion("split-volume-conservation", [&](Check& c) {
    std::mt19937_64 rng(20240817);
    int cases = 0;
    double worst = 0;
    while (cases < 1000) {
      auto k = static_cast<PrimitiveKind>(rng() % kPrimitiveKindCount);
      Shape s = random_shape(k, rng);
      Axis axis = kAllAxes[rng() % 6];
      double extent;
      try {
        extent = axis_extent(s, axis);
      } catch (const GeomError&) {
        continue;
      }
      size_t n = 2 + rng() % 3;
      std::vector<double> sizes(n);
      double acc = 0;
      for (size_t i = 0; i < n; ++i) {
        sizes[i] = 0.1 + std::uniform_real_distribution<double>(0, 1)(rng);
        acc += sizes[i];
      }
      double partial = 0;
      for (size_t i = 0; i + 1 < n; ++i) {
        sizes[i] *= extent / acc;
        partial += sizes[i];
      }
      sizes[n - 1] = extent - partial;
      if (sizes[n - 1] <= 1e-9) continue;

      auto parts = split_shape(s, axis, sizes);
      double vsum = 0;
      for (const auto& p : parts) vsum += shape_volume(p);
      double e = std::abs(vsum - shape_volume(s)) /
                 std::max(shape_volume(s), 1e-300);
      worst = std::max(worst, e);
      ++cases;
    }
    c.expect(worst < 1e-6, "split volume error " + fmt(worst, 3));

    std::mt19937_64 rng2(911);
    cases = 0;
    double worstPartition = 0, worstVol = 0;
    while (cases < 1000) {
      auto k = static_cast<PrimitiveKind>(rng2() % kPrimitiveKindCount);
      Shape s = random_shape(k, rng2);
      Axis axis = kAllAxes[rng2() % 6];
      double extent;
      try {
        extent = axis_extent(s, axis);
      } catch (const GeomError&) {
        continue;
      }
      size_t n = 1 + rng2() % 2;
      std::vector<double> sizes(n);
      double totalSize = 0;
      for (auto& v : sizes) {
        v = std::uniform_real_distribution<double>(extent / 9, extent / 2)(rng2);
        totalSize += v;
      }
      double off =
          std::uniform_real_distribution<double>(0, totalSize * 0.999)(rng2);
      auto parts = repeat_shape(s, axis, sizes, off);
      double esum = 0, vsum = 0;
      for (const auto& p : parts) {
        esum += axis_extent(p, axis);
        vsum += shape_volume(p);
      }
      worstPartition = std::max(worstPartition, std::abs(esum - extent) / extent);
      worstVol = std::max(worstVol, std::abs(vsum - shape_volume(s)) /
                                        std::max(shape_volume(s), 1e-300));
      ++cases;
    }
    c.expect(worstPartition < 1e-9,
             "repeat extent partition error " + fmt(worstPartition, 3));
    c.expect(worstVol < 1e-6, "repeat volume error " + fmt(worstVol, 3));
    c.note = "1000 splits (worst rel " + fmt(worst, 2) +
             "), 1000 repeats (axis gap " + fmt(worstPartition, 2) + ")";
  });

  criterion("csg-volume-identities", [&](Check& c) {
    Shape ca = make_primitive("box", {1, 1, 1});
    Shape cb = ca;
    apply_translate(cb, 0.5, 0, 0);
    TriMesh overlap =
        mesh_boolean(triangulate(ca, 8), triangulate(cb, 8), BooleanOp::intersect);
    c.rel(mesh_volume(overlap), 0.5, 1e-6, "half-shifted unit cube overlap");
    c.expect(is_watertight(overlap), "overlap mesh watertight");

    std::mt19937_64 rng(404);
    auto u = [&](double lo, double hi) {
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    int watertightFailures = 0;
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      Shape sa, sb;
      if (rng() % 2)
        sa = make_primitive("box", {u(0.5, 2), u(0.5, 2), u(0.5, 2)});
      else
        sa = make_primitive("cylinder", {u(0.3, 1.2), u(0.5, 2)});
      if (rng() % 2)
        sb = make_primitive("box", {u(0.5, 2), u(0.5, 2), u(0.5, 2)});
      else
        sb = make_primitive("cylinder", {u(0.3, 1.2), u(0.5, 2)});
      apply_rotate(sa, u(0, 3), u(0, 3), u(0, 3));
      apply_rotate(sb, u(0, 3), u(0, 3), u(0, 3));
      apply_translate(sb, u(-1, 1), u(-1, 1), u(-1, 1));

      TriMesh a = triangulate(sa, 24), b = triangulate(sb, 24);
      TriMesh un = mesh_boolean(a, b, BooleanOp::unite);
      TriMesh in = mesh_boolean(a, b, BooleanOp::intersect);
      TriMesh di = mesh_boolean(a, b, BooleanOp::subtract);
      for (const TriMesh* m : {&un, &in, &di})
        if (!mesh_is_empty(*m) && !is_watertight(*m)) ++watertightFailures;
      double va = mesh_volume(a), vb = mesh_volume(b);
      worst = std::max(worst, std::abs(mesh_volume(un) + mesh_volume(in) -
                                       (va + vb)) /
                                  (va + vb));
    }
    c.expect(worst < 1e-6, "inclusion-exclusion rel error " + fmt(worst, 3));
    c.expect(watertightFailures == 0,
             std::to_string(watertightFailures) + " non-watertight results");
    c.note = "200 random pairs, worst rel " + fmt(worst, 2) + ", all watertight";
  });

  criterion("boolean-dispatch-rows", [&](Check& c) {
    // row 1: copies (x) copies returns one fresh mesh shape, tree untouched
    {
      auto root = synthetic_tree();
      std::vector<Shape> a = {make_primitive("box", {1, 1, 1})};
      Shape shifted = make_primitive("box", {1, 1, 1});
      apply_translate(shifted, 0.5, 0, 0);
      std::vector<Shape> b = {shifted};
      ShapeSet sa{&a, nullptr}, sb{&b, nullptr};
      auto out = geometric_boolean(sa, sb, BooleanOp::intersect, 8);
      c.expect(out.size() == 1 && out[0].hasMesh(), "row1: one detached shape");
      if (out.size() == 1)
        c.rel(shape_volume(out[0]), 0.5, 1e-6, "row1: overlap volume");
      int live = 0;
      walk_tree(*root, [&](const SGNode&) { ++live; });
      c.expect(live == 13, "row1: tree node count unchanged");
    }
    // row 2: copies (x) refs also detaches; the referenced leaves survive
    {
      auto root = synthetic_tree();
      std::vector<Shape> a = {make_primitive("box", {3, 3, 3})};
      auto refs = terminals_query(*root, *root, "tower");
      ShapeSet sa{&a, nullptr}, sb{nullptr, &refs};
      auto out = geometric_boolean(sa, sb, BooleanOp::unite, 8);
      c.expect(out.size() == 1, "row2: one detached shape");
      c.expect(!refs[0]->deleted && refs[0]->terminal,
               "row2: referenced leaf retained");
      c.expect(!refs[0]->shape.hasMesh(), "row2: referenced leaf unmodified");
    }
    // row 3: refs (x) copies rewrites each target leaf in place
    {
      auto root = synthetic_tree();
      SGNode* brick = terminals_query(*root, *root, "tower")[0];
      brick->shape.appearance.set("diffuse", {false, {1, 0, 0}, ""});
      std::vector<Shape> cut = {make_primitive("box", {0.15, 1, 1})};
      std::vector<SGNode*> targets = {brick};
      ShapeSet st{nullptr, &targets}, sc{&cut, nullptr};
      auto out = geometric_boolean(st, sc, BooleanOp::subtract, 8);
      c.expect(out.empty(), "row3: no detached result");
      c.expect(brick->shape.hasMesh() && !brick->deleted, "row3: leaf rewritten");
      c.near(shape_volume(brick->shape), 0.3 * 0.3 * 0.15, 1e-9,
             "row3: carved volume");
      c.expect(brick->shape.appearance.find("diffuse") != nullptr,
               "row3: appearance kept");
    }
    // row 4: refs + refs unions in place and deletes the right leaves
    {
      auto root = synthetic_tree();
      auto left = terminals_query(*root, *root, "Axiom/wall/Bricks");
      auto right = terminals_query(*root, *root, "tower");
      SGNode* rightLeaf = right[0];
      ShapeSet sl{nullptr, &left}, sr{nullptr, &right};
      geometric_boolean(sl, sr, BooleanOp::unite, 8);
      c.expect(rightLeaf->deleted, "row4: right leaf deleted");
      c.expect(resolve_path(*root, *root, "tower/Bricks/brick").empty(),
               "row4: deleted leaf invisible to queries");
      c.expect(!left[0]->deleted && left[0]->shape.hasMesh(),
               "row4: left leaf carries the union");
    }
    // row 5: refs - refs rewrites the left targets but keeps the right leaves
    {
      auto root = synthetic_tree();
      auto left = terminals_query(*root, *root, "Axiom/wall/Bricks");
      auto right = terminals_query(*root, *root, "tower");
      double beforeRight = shape_volume(right[0]->shape);
      ShapeSet sl{nullptr, &left}, sr{nullptr, &right};
      geometric_boolean(sl, sr, BooleanOp::subtract, 8);
      c.expect(!right[0]->deleted, "row5: right leaf retained");
      c.near(shape_volume(right[0]->shape), beforeRight, 1e-12,
             "row5: right leaf untouched");
      c.expect(left[0]->shape.hasMesh(), "row5: left leaf rewritten");
    }
    c.note = "detach / detach-keep / rewrite / union-delete / subtract-keep";
  });

  criterion("query-oracle-agreement", [&](Check& c) {
    auto root = synthetic_tree();
    auto& r = *root;
    auto got = resolve_path(r, r, "wall/Bricks");
    auto want = oracle_matches(r, "wall/Bricks");
    c.expect(std::set<const SGNode*>(got.begin(), got.end()) == want,
             "wall/Bricks equals the reference matcher");
    c.expect(got.size() == 6, "wall/Bricks matches 6 nodes, got " +
                                  std::to_string(got.size()));

    c.expect(resolve_path(r, r, "nothing/here").empty(), "no-match path empty");
    c.expect(instances_query(r, r, "ghost").empty(), "no-match instances empty");
    c.expect(terminals_query(r, r, "ghost").empty(), "no-match terminals empty");

    std::mt19937_64 rng(1234);
    const char* symbols[] = {"wall", "brick", "tower", "seawall", "walkway",
                             "arch", "a", "b", "wa"};
    const char* patterns[] = {"wall",      "wall/brick", "a",
                              "wa/a",      "tower/arch", "b/b",
                              "wall/wa/a", "seawall",    "arch/arch",
                              "/wall/brick"};
    int disagreements = 0;
    for (int t = 0; t < 300; ++t) {
      auto rt = std::make_unique<SGNode>();
      rt->shape = make_primitive("box", {1, 1, 1});
      std::vector<SGNode*> open = {rt.get()};
      int n = 3 + (int)(rng() % 12);
      for (int i = 0; i < n; ++i) {
        SGNode* parent = open[rng() % open.size()];
        open.push_back(add(parent, symbols[rng() % 9], false));
      }
      const char* pat = patterns[rng() % 10];
      auto m = resolve_path(*rt, *rt, pat);
      if (std::set<const SGNode*>(m.begin(), m.end()) != oracle_matches(*rt, pat))
        ++disagreements;
    }
    c.expect(disagreements == 0,
             std::to_string(disagreements) + " of 300 random trees disagree");
    c.note = "4-level tree + 300 random trees match the reference; "
             "empty queries return empty";
  });

  criterion("stress-wall-scale", [&](Check& c) {
    auto t0 = Clock::now();
    auto r = run_program(demo("StressWall.psm"), RunOptions{});
    int bricks = count_terminals(*r.root, "brick", false);
    auto summary =
        write_obj(*r.root, out_dir("stress") + "/wall", ExportOptions{8, false});
    double dt = seconds_since(t0);
    struct rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    double peakGb = ru.ru_maxrss / (1024.0 * 1024.0);
    c.expect(bricks >= 10000,
             "needs 10k bricks, got " + std::to_string(bricks));
    c.expect(summary.faceCount >= 12 * bricks, "every brick exported");
    c.expect(dt < 60.0, "derive+export " + fmt(dt, 3) + " s exceeds 60 s");
    c.expect(peakGb < 2.0, "peak rss " + fmt(peakGb, 3) + " GB exceeds 2 GB");
    c.note = std::to_string(bricks) + " bricks, " + fmt(dt, 3) + " s, peak " +
             fmt(peakGb, 3) + " GB";
  });

  criterion("tessellation-convergence", [&](Check& c) {
    struct Probe {
      const char* kind;
      std::vector<double> params;
    } probes[] = {{"cylinder", {1, 2}}, {"cone", {1, 2}}, {"sphere", {1}}};
    std::string finals;
    for (const auto& p : probes) {
      Shape s = make_primitive(p.kind, p.params);
      double analytic = shape_volume(s);
      double prev = std::numeric_limits<double>::infinity();
      double err = prev;
      for (int n : {8, 16, 32, 64}) {
        err = std::abs(mesh_volume(triangulate(s, n)) - analytic) / analytic;
        c.expect(err < prev, std::string(p.kind) + ": error not decreasing at " +
                                 std::to_string(n) + " segments");
        prev = err;
      }
      c.expect(err < 0.005, std::string(p.kind) + ": final error " + fmt(err, 3));
      if (!finals.empty()) finals += ", ";
      finals += std::string(p.kind) + " " + fmt(err * 100, 2) + "%";
    }
    c.note = "errors shrink over 8/16/32/64; at 64: " + finals;
  });

  criterion("byte-determinism", [&](Check& c) {
    std::string stems[2] = {out_dir("det_a") + "/wall", out_dir("det_b") + "/wall"};
    for (const std::string& stem : stems) {
      RunOptions opt;
      opt.seed = 3;
      auto r = run_program(demo("StoneWall.psm"), opt);
      write_obj(*r.root, stem, ExportOptions{16, true});
      write_stats(*r.root, stem, {});
    }
    for (const char* ext : {".obj", ".mtl", ".stats.csv"})
      c.expect(slurp(stems[0] + ext) == slurp(stems[1] + ext),
               std::string(ext) + " differs between reruns");
    c.note = "seeded rerun reproduces OBJ, MTL and CSV byte for byte";
  });

  criterion("castle-gate-pipeline", [&](Check& c) {
    auto r = run_program(demo("CastleGate.psm"), RunOptions{});
    c.expect(r.terminalCount == 6,
             "6 visible terminals, got " + std::to_string(r.terminalCount));
    c.expect(r.voidCount == 1, "1 void walkway");
    int doorParts = count_terminals(*r.root, "jamb", false) +
                    count_terminals(*r.root, "lintel", false) +
                    count_terminals(*r.root, "panel", false);
    c.expect(doorParts == 5, "5 door terminals, got " + std::to_string(doorParts));
    double tower = terminal_volume(*r.root, "towerWall");
    double door = terminal_volume(*r.root, "jamb") +
                  terminal_volume(*r.root, "lintel") +
                  terminal_volume(*r.root, "panel");
    c.near(tower, 75.168, 1e-6, "carved wall volume");
    c.near(door, 11.232, 1e-6, "door fills the carved opening");
    c.near(r.totalVolume, 86.4, 1e-6, "total visible volume");
    c.expect(!resolve_path(*r.root, *r.root, "doorway/GothicDoor").empty(),
             "door grammar attached under the opening");
    c.note = "wall carved to " + fmt(tower, 6) + ", door adds " + fmt(door, 6) +
             ", total " + fmt(r.totalVolume, 6);
  });

  std::cout << (failures == 0 ? "ALL " : "") << (total - failures) << " of "
            << total << " checks passed\n";
  return failures == 0 ? 0 : 1;
}
