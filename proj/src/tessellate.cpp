#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "psml/geometry.hpp"
#include "psml/trimesh.hpp"

namespace psml {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;

// ---------------------------------------------------------------------------
// convex polytope from half-spaces n.x <= d (box / ramp / tetra families)
// ---------------------------------------------------------------------------

struct HalfSpace {
  Eigen::Vector3d n;
  double d;
};

TriMesh mesh_polytope(std::vector<HalfSpace> planes, double scaleHint) {
  // drop duplicate planes so coincident faces cannot appear twice
  for (auto& h : planes) {
    double l = h.n.norm();
    h.n /= l;
    h.d /= l;
  }
  std::vector<HalfSpace> uniq;
  for (const auto& h : planes) {
    bool dup = false;
    for (const auto& u : uniq)
      if ((h.n - u.n).norm() < 1e-9 && std::abs(h.d - u.d) < 1e-9 * scaleHint)
        dup = true;
    if (!dup) uniq.push_back(h);
  }
  planes = std::move(uniq);

  double eps = 1e-9 * scaleHint;
  std::vector<Eigen::Vector3d> verts;
  size_t np = planes.size();
  for (size_t i = 0; i < np; ++i)
    for (size_t j = i + 1; j < np; ++j)
      for (size_t k = j + 1; k < np; ++k) {
        Eigen::Matrix3d A;
        A.row(0) = planes[i].n;
        A.row(1) = planes[j].n;
        A.row(2) = planes[k].n;
        double det = A.determinant();
        if (std::abs(det) < 1e-10) continue;
        Eigen::Vector3d b(planes[i].d, planes[j].d, planes[k].d);
        Eigen::Vector3d p = A.inverse() * b;
        bool ok = true;
        for (const auto& h : planes)
          if (h.n.dot(p) > h.d + eps) {
            ok = false;
            break;
          }
        if (!ok) continue;
        bool dup = false;
        for (const auto& v : verts)
          if ((v - p).norm() < 10 * eps) {
            dup = true;
            break;
          }
        if (!dup) verts.push_back(p);
      }

  TriMesh m;
  m.verts = verts;
  for (const auto& h : planes) {
    std::vector<int> face;
    for (size_t i = 0; i < verts.size(); ++i)
      if (std::abs(h.n.dot(verts[i]) - h.d) <= 2 * eps) face.push_back((int)i);
    if (face.size() < 3) continue;
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int i : face) c += verts[i];
    c /= (double)face.size();
    Eigen::Vector3d u = (verts[face[0]] - c);
    if (u.norm() < eps) continue;
    u.normalize();
    Eigen::Vector3d v = h.n.cross(u);
    std::sort(face.begin(), face.end(), [&](int a, int b) {
      Eigen::Vector3d pa = verts[a] - c, pb = verts[b] - c;
      return std::atan2(v.dot(pa), u.dot(pa)) < std::atan2(v.dot(pb), u.dot(pb));
    });
    // reject slivers left by redundant planes touching the hull in an edge
    double area2 = 0;
    for (size_t i = 1; i + 1 < face.size(); ++i)
      area2 += (verts[face[i]] - verts[face[0]])
                   .cross(verts[face[i + 1]] - verts[face[0]])
                   .norm();
    if (area2 < 1e-14 * scaleHint * scaleHint) continue;
    for (size_t i = 1; i + 1 < face.size(); ++i)
      m.tris.push_back({face[0], face[i], face[i + 1]});
  }
  // drop vertices that ended up unused (apex-degenerate faces)
  std::vector<int> remap(m.verts.size(), -1);
  std::vector<Eigen::Vector3d> keep;
  for (auto& t : m.tris)
    for (int& ix : t) {
      if (remap[ix] < 0) {
        remap[ix] = (int)keep.size();
        keep.push_back(m.verts[ix]);
      }
      ix = remap[ix];
    }
  m.verts = std::move(keep);
  return m;
}

std::vector<HalfSpace> box_planes(const BoxDesc& b) {
  return {{{-1, 0, 0}, -b.x0}, {{1, 0, 0}, b.x1},  {{0, -1, 0}, -b.y0},
          {{0, 1, 0}, b.y1},   {{0, 0, -1}, -b.z0}, {{0, 0, 1}, b.z1}};
}

std::vector<HalfSpace> ramp_planes(const RampDesc& r) {
  double slope = (r.y1 == r.y0) ? 0.0 : (r.w1 - r.w0) / (r.y1 - r.y0);
  double cOut = r.xBack + r.w0 - slope * r.y0; // x - slope*y <= cOut
  return {{{0, -1, 0}, -r.y0},
          {{0, 1, 0}, r.y1},
          {{0, 0, -1}, -r.z0},
          {{0, 0, 1}, r.z1},
          {{-1, 0, 0}, -r.xBack},
          {{1, -slope, 0}, cOut},
          {{-1, slope, 0}, -(cOut - r.wall)}};
}

std::vector<HalfSpace> tetra_planes(const TetraDesc& t) {
  double by = t.legX / t.legH, bz = t.legX / t.legZ;
  // x + by*(y-yBase) + bz*(z-zBase) <= xBack + legX
  double cOut = t.xBack + t.legX + by * t.yBase + bz * t.zBase;
  return {{{0, -1, 0}, -t.y0},
          {{0, 1, 0}, t.y1},
          {{0, 0, -1}, -t.zBase},
          {{-1, 0, 0}, -t.xBack},
          {{1, by, bz}, cOut},
          {{-1, -by, -bz}, -(cOut - t.wall)}};
}

// ---------------------------------------------------------------------------
// surfaces of revolution about local y
// ---------------------------------------------------------------------------

double poly_signed_area(const std::vector<Eigen::Vector2d>& p) {
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

// ear-clip a CCW simple polygon; tolerant of collinear runs
std::vector<std::array<int, 3>> ear_clip(const std::vector<Eigen::Vector2d>& poly) {
  std::vector<std::array<int, 3>> tris;
  std::vector<int> idx(poly.size());
  for (size_t i = 0; i < poly.size(); ++i) idx[i] = (int)i;
  auto cross2 = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                   const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  auto inside = [&](const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                    const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    double d1 = cross2(a, b, p), d2 = cross2(b, c, p), d3 = cross2(c, a, p);
    return d1 > 1e-14 && d2 > 1e-14 && d3 > 1e-14;
  };
  int guard = 0;
  while (idx.size() > 3 && guard < 10000) {
    ++guard;
    bool clipped = false;
    size_t n = idx.size();
    int bestFlat = -1;
    for (size_t i = 0; i < n; ++i) {
      int ip = idx[(i + n - 1) % n], ic = idx[i], in = idx[(i + 1) % n];
      double cr = cross2(poly[ip], poly[ic], poly[in]);
      if (cr <= 1e-14) {
        if (cr >= -1e-14 && bestFlat < 0) bestFlat = (int)i;
        continue;
      }
      bool empty = true;
      for (size_t j = 0; j < n; ++j) {
        int q = idx[j];
        if (q == ip || q == ic || q == in) continue;
        if (inside(poly[q], poly[ip], poly[ic], poly[in])) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      tris.push_back({ip, ic, in});
      idx.erase(idx.begin() + (long)i);
      clipped = true;
      break;
    }
    if (!clipped) {
      // collinear wedge: drop it without emitting area
      size_t at = bestFlat >= 0 ? (size_t)bestFlat : 1;
      idx.erase(idx.begin() + (long)at);
    }
  }
  if (idx.size() == 3) tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

int prorated_segments(int segments, double span, double fullSpan) {
  if (span >= fullSpan - 1e-9) return std::max(3, segments);
  int n = (int)std::ceil(segments * span / kTwoPi - 1e-9);
  return std::max(1, n);
}

// sweep a CCW (rho, y) profile through [theta0, theta1]
TriMesh sweep_profile(std::vector<Eigen::Vector2d> profile, double theta0,
                      double theta1, int nTheta, double scaleHint) {
  // snap near-axis points and collapse duplicates
  double axisEps = 1e-12 * scaleHint;
  for (auto& p : profile)
    if (p.x() <= axisEps) p.x() = 0.0;
  std::vector<Eigen::Vector2d> clean;
  for (const auto& p : profile) {
    if (!clean.empty() && (p - clean.back()).norm() < axisEps) continue;
    clean.push_back(p);
  }
  while (clean.size() > 1 && (clean.front() - clean.back()).norm() < axisEps)
    clean.pop_back();
  profile = std::move(clean);
  if (poly_signed_area(profile) < 0)
    std::reverse(profile.begin(), profile.end());

  size_t m = profile.size();
  bool full = (theta1 - theta0) >= kTwoPi - 1e-9;
  int rings = full ? nTheta : nTheta + 1;

  TriMesh mesh;
  std::vector<std::vector<int>> vid(m, std::vector<int>(rings, -1));
  auto vertex = [&](size_t i, int j) {
    bool axis = profile[i].x() == 0.0;
    int cacheJ = axis ? 0 : j;
    int& slot = vid[i][cacheJ];
    if (slot >= 0) return slot;
    double th = full ? theta0 + kTwoPi * j / nTheta
                     : theta0 + (theta1 - theta0) * j / nTheta;
    double rho = profile[i].x(), y = profile[i].y();
    slot = (int)mesh.verts.size();
    mesh.verts.push_back(axis ? Eigen::Vector3d(0, y, 0)
                              : Eigen::Vector3d(rho * std::cos(th), y,
                                                rho * std::sin(th)));
    return slot;
  };
  auto emit = [&](int a, int b, int c) {
    if (a == b || b == c || c == a) return;
    mesh.tris.push_back({a, b, c});
  };

  for (size_t i = 0; i < m; ++i) {
    size_t i2 = (i + 1) % m;
    if (profile[i].x() == 0.0 && profile[i2].x() == 0.0) continue; // on axis
    for (int j = 0; j < nTheta; ++j) {
      int j2 = full ? (j + 1) % nTheta : j + 1;
      int aj = vertex(i, j), bj = vertex(i2, j);
      int a2 = vertex(i, j2), b2 = vertex(i2, j2);
      emit(aj, bj, b2);
      emit(aj, b2, a2);
    }
  }

  if (!full) {
    auto ears = ear_clip(profile);
    for (const auto& e : ears) {
      emit(vertex(e[0], 0), vertex(e[2], 0), vertex(e[1], 0));
      emit(vertex(e[0], nTheta), vertex(e[1], nTheta), vertex(e[2], nTheta));
    }
  }
  return mesh;
}

std::vector<Eigen::Vector2d> revolve_profile(const RevolveDesc& r) {
  auto inner = [&](double out) { return std::max(out - r.wall, 0.0); };
  double in0 = inner(r.out0), in1 = inner(r.out1);
  std::vector<Eigen::Vector2d> p;
  p.push_back({in0, r.y0});
  p.push_back({r.out0, r.y0});
  p.push_back({r.out1, r.y1});
  p.push_back({in1, r.y1});
  // inner wall descends from y1 to y0 with a kink where out(y) == wall
  if ((r.out0 - r.wall) * (r.out1 - r.wall) < 0.0) {
    double t = (r.wall - r.out0) / (r.out1 - r.out0);
    p.push_back({0.0, r.y0 + t * (r.y1 - r.y0)});
  }
  return p;
}

std::vector<Eigen::Vector2d> sphere_profile(const SphereDesc& s, int nPhi) {
  std::vector<Eigen::Vector2d> p;
  for (int i = 0; i <= nPhi; ++i) {
    double ph = s.phi0 + (s.phi1 - s.phi0) * i / nPhi;
    p.push_back({s.r1 * std::sin(ph), s.r1 * std::cos(ph)});
  }
  if (s.r0 > 1e-12 * s.r1) {
    for (int i = nPhi; i >= 0; --i) {
      double ph = s.phi0 + (s.phi1 - s.phi0) * i / nPhi;
      p.push_back({s.r0 * std::sin(ph), s.r0 * std::cos(ph)});
    }
  } else {
    p.push_back({0.0, 0.0});
  }
  return p;
}

double descriptor_scale_hint(const PrimitiveDescriptor& d) {
  Eigen::AlignedBox3d b = local_bounds(d);
  double s = b.diagonal().norm();
  return std::max(s, 1e-12);
}

} // namespace

TriMesh triangulate(const Shape& s, int segments) {
  if (segments < 3)
    throw GeomError("invalid-segments", "segment count must be at least 3");
  if (s.hasMesh()) return *s.meshPayload;

  double hint = descriptor_scale_hint(s.desc);
  TriMesh local;
  switch (s.desc.base) {
  case BaseFamily::box:
    local = mesh_polytope(box_planes(std::get<BoxDesc>(s.desc.geo)), hint);
    break;
  case BaseFamily::ramp:
    local = mesh_polytope(ramp_planes(std::get<RampDesc>(s.desc.geo)), hint);
    break;
  case BaseFamily::tetra:
    local = mesh_polytope(tetra_planes(std::get<TetraDesc>(s.desc.geo)), hint);
    break;
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(s.desc.geo);
    double span = r.theta1 - r.theta0;
    int nt = prorated_segments(segments, span, kTwoPi);
    local = sweep_profile(revolve_profile(r), r.theta0, r.theta1, nt, hint);
    break;
  }
  case BaseFamily::sphere: {
    const auto& sp = std::get<SphereDesc>(s.desc.geo);
    double span = sp.theta1 - sp.theta0;
    int nt = prorated_segments(segments, span, kTwoPi);
    int np = std::max(1, (int)std::ceil(segments * (sp.phi1 - sp.phi0) /
                                            kTwoPi - 1e-9));
    local = sweep_profile(sphere_profile(sp, np), sp.theta0, sp.theta1, nt, hint);
    break;
  }
  }
  transform_mesh(local, s.frame);
  return local;
}

} // namespace psml
