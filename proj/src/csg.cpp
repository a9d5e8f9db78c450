#include "psml/csg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

namespace psml {

namespace {

constexpr double kPlaneEps = 1e-9;

struct CPoly {
  std::vector<Eigen::Vector3d> pts;
  Eigen::Vector3d n;
  double w;
  int mat = 0;

  void flip() {
    std::reverse(pts.begin(), pts.end());
    n = -n;
    w = -w;
  }
};

bool plane_from_points(const std::vector<Eigen::Vector3d>& pts,
                       Eigen::Vector3d& n, double& w) {
  // Newell's method tolerates nearly collinear leading vertices
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d& a = pts[i];
    const Eigen::Vector3d& b = pts[(i + 1) % pts.size()];
    acc += (a - b).cross(a + b);
    c += a;
  }
  double l = acc.norm();
  if (l < 1e-14) return false;
  n = acc / l;
  w = n.dot(c / (double)pts.size());
  return true;
}

enum { kCoplanar = 0, kFront = 1, kBack = 2, kSpanning = 3 };

void split_polygon(const Eigen::Vector3d& n, double w, const CPoly& p,
                   std::vector<CPoly>& coFront, std::vector<CPoly>& coBack,
                   std::vector<CPoly>& front, std::vector<CPoly>& back) {
  int polyType = 0;
  std::vector<int> types(p.pts.size());
  for (size_t i = 0; i < p.pts.size(); ++i) {
    double t = n.dot(p.pts[i]) - w;
    int ty = t < -kPlaneEps ? kBack : (t > kPlaneEps ? kFront : kCoplanar);
    polyType |= ty;
    types[i] = ty;
  }
  switch (polyType) {
  case kCoplanar:
    (n.dot(p.n) > 0 ? coFront : coBack).push_back(p);
    break;
  case kFront:
    front.push_back(p);
    break;
  case kBack:
    back.push_back(p);
    break;
  case kSpanning: {
    CPoly f, b;
    f.n = b.n = p.n;
    f.w = b.w = p.w;
    f.mat = b.mat = p.mat;
    size_t m = p.pts.size();
    for (size_t i = 0; i < m; ++i) {
      size_t j = (i + 1) % m;
      int ti = types[i], tj = types[j];
      const Eigen::Vector3d& vi = p.pts[i];
      const Eigen::Vector3d& vj = p.pts[j];
      if (ti != kBack) f.pts.push_back(vi);
      if (ti != kFront) b.pts.push_back(vi);
      if ((ti | tj) == kSpanning) {
        double t = (w - n.dot(vi)) / n.dot(vj - vi);
        Eigen::Vector3d v = vi + t * (vj - vi);
        f.pts.push_back(v);
        b.pts.push_back(v);
      }
    }
    if (f.pts.size() >= 3) front.push_back(std::move(f));
    if (b.pts.size() >= 3) back.push_back(std::move(b));
    break;
  }
  }
}

struct Node {
  bool hasPlane = false;
  Eigen::Vector3d n;
  double w = 0;
  std::unique_ptr<Node> front, back;
  std::vector<CPoly> polys;

  void invert() {
    for (auto& p : polys) p.flip();
    if (hasPlane) {
      n = -n;
      w = -w;
    }
    if (front) front->invert();
    if (back) back->invert();
    std::swap(front, back);
  }

  std::vector<CPoly> clip_polygons(std::vector<CPoly> ps) const {
    if (!hasPlane) return ps;
    std::vector<CPoly> f, b;
    for (auto& p : ps) split_polygon(n, w, p, f, b, f, b);
    if (front) f = front->clip_polygons(std::move(f));
    if (back)
      b = back->clip_polygons(std::move(b));
    else
      b.clear();
    f.insert(f.end(), b.begin(), b.end());
    return f;
  }

  void clip_to(const Node& other) {
    polys = other.clip_polygons(std::move(polys));
    if (front) front->clip_to(other);
    if (back) back->clip_to(other);
  }

  void build(std::vector<CPoly> ps) {
    if (ps.empty()) return;
    if (!hasPlane) {
      n = ps[0].n;
      w = ps[0].w;
      hasPlane = true;
    }
    std::vector<CPoly> f, b;
    for (auto& p : ps) split_polygon(n, w, p, polys, polys, f, b);
    if (!f.empty()) {
      if (!front) front = std::make_unique<Node>();
      front->build(std::move(f));
    }
    if (!b.empty()) {
      if (!back) back = std::make_unique<Node>();
      back->build(std::move(b));
    }
  }

  void collect(std::vector<CPoly>& out) const {
    out.insert(out.end(), polys.begin(), polys.end());
    if (front) front->collect(out);
    if (back) back->collect(out);
  }
};

std::vector<CPoly> mesh_to_polys(const TriMesh& m) {
  std::vector<CPoly> out;
  out.reserve(m.tris.size());
  for (size_t i = 0; i < m.tris.size(); ++i) {
    CPoly p;
    p.pts = {m.verts[m.tris[i][0]], m.verts[m.tris[i][1]], m.verts[m.tris[i][2]]};
    if (!plane_from_points(p.pts, p.n, p.w)) continue;
    p.mat = m.material(i);
    out.push_back(std::move(p));
  }
  return out;
}

// ---- crack repair: weld vertices, resolve T-junctions, re-triangulate ----

struct VertexPool {
  std::vector<Eigen::Vector3d> verts;
  std::map<std::array<long long, 3>, std::vector<int>> grid;
  double cell = 4e-9;

  std::array<long long, 3> key(const Eigen::Vector3d& p) const {
    return {(long long)std::floor(p.x() / cell),
            (long long)std::floor(p.y() / cell),
            (long long)std::floor(p.z() / cell)};
  }

  int intern(const Eigen::Vector3d& p) {
    auto k = key(p);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == grid.end()) continue;
          for (int ix : it->second)
            if ((verts[ix] - p).norm() <= 1e-9) return ix;
        }
    int ix = (int)verts.size();
    verts.push_back(p);
    grid[k].push_back(ix);
    return ix;
  }
};

TriMesh finalize_polys(const std::vector<CPoly>& polys) {
  VertexPool pool;
  struct IPoly {
    std::vector<int> idx;
    int mat;
  };
  std::vector<IPoly> ip;
  for (const auto& p : polys) {
    IPoly q;
    q.mat = p.mat;
    for (const auto& v : p.pts) {
      int ix = pool.intern(v);
      if (q.idx.empty() || q.idx.back() != ix) q.idx.push_back(ix);
    }
    while (q.idx.size() > 1 && q.idx.front() == q.idx.back()) q.idx.pop_back();
    if (q.idx.size() >= 3) ip.push_back(std::move(q));
  }

  // insert pool vertices that sit on a polygon edge but are not its endpoints
  const auto& V = pool.verts;
  for (auto& q : ip) {
    std::vector<int> out;
    size_t m = q.idx.size();
    for (size_t i = 0; i < m; ++i) {
      int a = q.idx[i], b = q.idx[(i + 1) % m];
      out.push_back(a);
      Eigen::Vector3d ab = V[b] - V[a];
      double len2 = ab.squaredNorm();
      if (len2 < 1e-24) continue;
      std::vector<std::pair<double, int>> ons;
      for (int w = 0; w < (int)V.size(); ++w) {
        if (w == a || w == b) continue;
        double t = ab.dot(V[w] - V[a]) / len2;
        if (t <= 1e-9 || t >= 1.0 - 1e-9) continue;
        Eigen::Vector3d perp = V[w] - V[a] - t * ab;
        if (perp.norm() <= 1e-9) ons.push_back({t, w});
      }
      std::sort(ons.begin(), ons.end());
      for (auto& [t, w] : ons)
        if (out.back() != w) out.push_back(w);
    }
    q.idx = std::move(out);
  }

  TriMesh mesh;
  mesh.verts = pool.verts;
  bool anyMat = false;
  for (const auto& q : ip)
    if (q.mat != 0) anyMat = true;
  for (const auto& q : ip) {
    if (q.idx.size() == 3) {
      mesh.tris.push_back({q.idx[0], q.idx[1], q.idx[2]});
      if (anyMat) mesh.mats.push_back(q.mat);
      continue;
    }
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int ix : q.idx) c += mesh.verts[ix];
    c /= (double)q.idx.size();
    int ci = (int)mesh.verts.size();
    mesh.verts.push_back(c);
    for (size_t i = 0; i < q.idx.size(); ++i) {
      int a = q.idx[i], b = q.idx[(i + 1) % q.idx.size()];
      if (a == b) continue;
      mesh.tris.push_back({ci, a, b});
      if (anyMat) mesh.mats.push_back(q.mat);
    }
  }
  return mesh;
}

} // namespace

std::optional<BooleanOp> op_from_symbol(const std::string& sym) {
  if (sym == "+") return BooleanOp::unite;
  if (sym == "-") return BooleanOp::subtract;
  if (sym == "&&") return BooleanOp::intersect;
  return std::nullopt;
}

TriMesh mesh_boolean(const TriMesh& ma, const TriMesh& mb, BooleanOp op) {
  if (ma.tris.empty() && mb.tris.empty()) return {};
  if (ma.tris.empty())
    return op == BooleanOp::unite ? finalize_polys(mesh_to_polys(mb)) : TriMesh{};
  if (mb.tris.empty())
    return op == BooleanOp::intersect ? TriMesh{}
                                      : finalize_polys(mesh_to_polys(ma));

  Node a, b;
  a.build(mesh_to_polys(ma));
  b.build(mesh_to_polys(mb));

  auto merge_b_into_a = [&]() {
    std::vector<CPoly> bp;
    b.collect(bp);
    a.build(std::move(bp));
  };

  switch (op) {
  case BooleanOp::unite:
    a.clip_to(b);
    b.clip_to(a);
    b.invert();
    b.clip_to(a);
    b.invert();
    merge_b_into_a();
    break;
  case BooleanOp::subtract:
    a.invert();
    a.clip_to(b);
    b.clip_to(a);
    b.invert();
    b.clip_to(a);
    b.invert();
    merge_b_into_a();
    a.invert();
    break;
  case BooleanOp::intersect:
    a.invert();
    b.clip_to(a);
    b.invert();
    a.clip_to(b);
    b.clip_to(a);
    merge_b_into_a();
    a.invert();
    break;
  }
  std::vector<CPoly> all;
  a.collect(all);
  TriMesh out = finalize_polys(all);
  if (std::abs(signed_volume(out)) < 1e-12) return {};
  return out;
}

} // namespace psml
