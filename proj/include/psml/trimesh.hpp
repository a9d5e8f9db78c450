// Indexed triangle meshes, watertightness checks and divergence-theorem
// volume, plus tessellation of primitive shapes.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "psml/geometry.hpp"

namespace psml {

struct TriMesh {
  std::vector<Eigen::Vector3d> verts;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> mats; // per-triangle material id; empty means all zero

  int material(size_t tri) const {
    return mats.empty() ? 0 : mats[tri];
  }
};

// Signed volume, one sixth of the summed triple products. Exact for closed
// consistently oriented surfaces regardless of index-level watertightness.
double signed_volume(const TriMesh& m);

// Every directed edge must appear exactly once and its reverse exactly once.
bool is_watertight(const TriMesh& m);

// Watertight-checked |signed volume|; throws GeomError(non-watertight-mesh).
double mesh_volume(const TriMesh& m);

Eigen::AlignedBox3d mesh_bounds(const TriMesh& m);

// Connected components under shared-edge adjacency.
int shell_count(const TriMesh& m);

// V - E + F over unique undirected edges.
int euler_characteristic(const TriMesh& m);

void transform_mesh(TriMesh& m, const Frame& f);

// Appends src, shifting its material ids by materialOffset (a plain merge
// when both meshes already share a material table).
void append_mesh(TriMesh& dst, const TriMesh& src, int materialOffset = 0);

// Watertight, outward-oriented triangulation. `segments` is the arc sample
// count for a full revolution (minimum 3), prorated for angular sectors;
// planar families ignore it.
TriMesh triangulate(const Shape& s, int segments);

} // namespace psml
