#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "psml/csg.hpp"

using namespace psml;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

double vol(const TriMesh& m) { return mesh_is_empty(m) ? 0.0 : mesh_volume(m); }

TriMesh unit_cube_at(double x) {
  Shape s = make_primitive("box", {1, 1, 1});
  apply_translate(s, x, 0, 0);
  return triangulate(s, 8);
}

} // namespace

TEST_CASE("op symbols") {
  CHECK(op_from_symbol("+") == BooleanOp::unite);
  CHECK(op_from_symbol("-") == BooleanOp::subtract);
  CHECK(op_from_symbol("&&") == BooleanOp::intersect);
  CHECK(!op_from_symbol("^").has_value());
}

TEST_CASE("shifted cube intersection has half the volume") {
  TriMesh r = mesh_boolean(unit_cube_at(0), unit_cube_at(0.5), BooleanOp::intersect);
  CHECK(is_watertight(r));
  CHECK(rel_err(vol(r), 0.5) < 1e-6);
}

TEST_CASE("self difference is empty, self union and intersection are identity") {
  TriMesh a = unit_cube_at(0);
  CHECK(mesh_is_empty(mesh_boolean(a, a, BooleanOp::subtract)));
  CHECK(rel_err(vol(mesh_boolean(a, a, BooleanOp::unite)), 1.0) < 1e-6);
  CHECK(rel_err(vol(mesh_boolean(a, a, BooleanOp::intersect)), 1.0) < 1e-6);
}

TEST_CASE("disjoint union keeps both shells") {
  TriMesh r = mesh_boolean(unit_cube_at(0), unit_cube_at(5), BooleanOp::unite);
  CHECK(is_watertight(r));
  CHECK(rel_err(vol(r), 2.0) < 1e-6);
  CHECK(shell_count(r) == 2);
  CHECK(mesh_is_empty(mesh_boolean(unit_cube_at(0), unit_cube_at(5),
                                   BooleanOp::intersect)));
}

TEST_CASE("empty operands") {
  TriMesh a = unit_cube_at(0), none;
  CHECK(rel_err(vol(mesh_boolean(a, none, BooleanOp::unite)), 1.0) < 1e-6);
  CHECK(rel_err(vol(mesh_boolean(none, a, BooleanOp::unite)), 1.0) < 1e-6);
  CHECK(mesh_is_empty(mesh_boolean(none, a, BooleanOp::intersect)));
  CHECK(mesh_is_empty(mesh_boolean(none, a, BooleanOp::subtract)));
  CHECK(rel_err(vol(mesh_boolean(a, none, BooleanOp::subtract)), 1.0) < 1e-6);
  CHECK(mesh_is_empty(mesh_boolean(none, none, BooleanOp::unite)));
}

TEST_CASE("groin vault volume via inclusion-exclusion") {
  // box minus two orthogonal half-overlapping cylinders, the oracle assembled
  // from the tessellated cylinder volumes so only the booleans are under test
  TriMesh box = triangulate(make_primitive("box", {2, 2, 2}), 8);
  Shape c1s = make_primitive("cylinder", {0.5, 2});
  Shape c2s = c1s;
  apply_rotate(c2s, 3.14159265358979323846 / 2, 0, 0); // axis now along z
  TriMesh c1 = triangulate(c1s, 48), c2 = triangulate(c2s, 48);

  TriMesh inter = mesh_boolean(c1, c2, BooleanOp::intersect);
  double unionVol = vol(c1) + vol(c2) - vol(inter);
  TriMesh carved =
      mesh_boolean(mesh_boolean(box, c1, BooleanOp::subtract), c2,
                   BooleanOp::subtract);
  CHECK(is_watertight(carved));
  CHECK(rel_err(vol(carved), 8.0 - unionVol) < 1e-6);
}

TEST_CASE("boolean identities on randomized box and cylinder pairs") {
  std::mt19937_64 rng(404);
  auto u = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  int watertightFailures = 0;
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

    CAPTURE(i);
    for (const TriMesh* m : {&un, &in, &di})
      if (!mesh_is_empty(*m) && !is_watertight(*m)) ++watertightFailures;

    double va = vol(a), vb = vol(b);
    CHECK(rel_err(vol(un) + vol(in), va + vb) < 1e-6);
    CHECK(vol(di) >= -1e-12);
    CHECK(vol(di) <= va * (1 + 1e-9));

    // commutativity
    CHECK(rel_err(vol(un), vol(mesh_boolean(b, a, BooleanOp::unite))) < 1e-6);
    if (!mesh_is_empty(in))
      CHECK(rel_err(vol(in), vol(mesh_boolean(b, a, BooleanOp::intersect))) < 1e-6);
  }
  CHECK(watertightFailures == 0);
}

TEST_CASE("materials survive the boolean") {
  TriMesh a = unit_cube_at(0);
  a.mats.assign(a.tris.size(), 3);
  TriMesh b = unit_cube_at(0.5);
  b.mats.assign(b.tris.size(), 7);
  TriMesh r = mesh_boolean(a, b, BooleanOp::unite);
  REQUIRE(r.mats.size() == r.tris.size());
  bool saw3 = false, saw7 = false;
  for (int m : r.mats) {
    if (m == 3) saw3 = true;
    if (m == 7) saw7 = true;
    CHECK((m == 3 || m == 7));
  }
  CHECK(saw3);
  CHECK(saw7);
}

TEST_CASE("near-miss intersection collapses to empty") {
  TriMesh a = unit_cube_at(0);
  TriMesh b = unit_cube_at(1.0); // shares only a face
  TriMesh r = mesh_boolean(a, b, BooleanOp::intersect);
  CHECK(mesh_is_empty(r));
  CHECK(vol(r) == 0.0);
}
