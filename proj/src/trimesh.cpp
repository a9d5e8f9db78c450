#include "psml/trimesh.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>

#include "psml/geometry.hpp"

namespace psml {

double signed_volume(const TriMesh& m) {
  double v = 0;
  for (const auto& t : m.tris) {
    const Eigen::Vector3d& a = m.verts[t[0]];
    const Eigen::Vector3d& b = m.verts[t[1]];
    const Eigen::Vector3d& c = m.verts[t[2]];
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

bool is_watertight(const TriMesh& m) {
  if (m.tris.empty()) return true;
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : m.tris) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a == b) return false;
      edges[{a, b}] += 1;
    }
  }
  for (const auto& [e, n] : edges) {
    if (n != 1) return false;
    auto rev = edges.find({e.second, e.first});
    if (rev == edges.end() || rev->second != 1) return false;
  }
  return true;
}

double mesh_volume(const TriMesh& m) {
  if (!is_watertight(m))
    throw GeomError("non-watertight-mesh",
                    "volume requested for a mesh with unmatched edges");
  return std::abs(signed_volume(m));
}

Eigen::AlignedBox3d mesh_bounds(const TriMesh& m) {
  Eigen::AlignedBox3d b;
  for (const auto& v : m.verts) b.extend(v);
  return b;
}

namespace {
struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int a) {
    while (p[a] != a) a = p[a] = p[p[a]];
    return a;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
};
} // namespace

int shell_count(const TriMesh& m) {
  if (m.tris.empty()) return 0;
  UnionFind uf(m.tris.size());
  std::map<std::pair<int, int>, int> owner; // undirected edge -> first tri
  for (size_t i = 0; i < m.tris.size(); ++i) {
    const auto& t = m.tris[i];
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      auto key = std::minmax(a, b);
      auto [it, fresh] = owner.insert({{key.first, key.second}, (int)i});
      if (!fresh) uf.unite((int)i, it->second);
    }
  }
  std::set<int> roots;
  for (size_t i = 0; i < m.tris.size(); ++i) roots.insert(uf.find((int)i));
  return (int)roots.size();
}

int euler_characteristic(const TriMesh& m) {
  std::set<int> used;
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.tris) {
    for (int e = 0; e < 3; ++e) {
      used.insert(t[e]);
      int a = t[e], b = t[(e + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return (int)used.size() - (int)edges.size() + (int)m.tris.size();
}

void transform_mesh(TriMesh& m, const Frame& f) {
  bool flip = f.rot.determinant() * f.scale.prod() < 0;
  for (auto& v : m.verts) v = f.apply(v);
  if (flip)
    for (auto& t : m.tris) std::swap(t[1], t[2]);
}

void append_mesh(TriMesh& dst, const TriMesh& src, int materialOffset) {
  int base = (int)dst.verts.size();
  dst.verts.insert(dst.verts.end(), src.verts.begin(), src.verts.end());
  bool needMats = materialOffset != 0 || !dst.mats.empty() || !src.mats.empty();
  if (needMats && dst.mats.empty()) dst.mats.assign(dst.tris.size(), 0);
  for (size_t i = 0; i < src.tris.size(); ++i) {
    const auto& t = src.tris[i];
    dst.tris.push_back({t[0] + base, t[1] + base, t[2] + base});
    if (needMats)
      dst.mats.push_back((src.mats.empty() ? 0 : src.mats[i]) + materialOffset);
  }
}

} // namespace psml
