#include "psml/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "psml/trimesh.hpp"

namespace psml {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;

double len_eps(double scaleHint) { return 1e-9 * std::max(1.0, std::abs(scaleHint)); }

[[noreturn]] void fail(const char* code, const std::string& msg) {
  throw GeomError(code, msg);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0))
    fail("non-positive-dimension", std::string(what) + " must be positive");
}

double lerp_at(double y0, double y1, double v0, double v1, double y) {
  if (y1 == y0) return v0;
  return v0 + (v1 - v0) * ((y - y0) / (y1 - y0));
}

// ---- piecewise band integrals (profile v linear over [y0,y1], wall > 0) ----

// integral of min(v(y), wall) dy
double band_area(double y0, double y1, double v0, double v1, double wall) {
  auto seg = [&](double a, double b, double va, double vb) {
    double mida = std::min(va, wall), midb = std::min(vb, wall);
    return 0.5 * (mida + midb) * (b - a);
  };
  if ((v0 - wall) * (v1 - wall) < 0.0) {
    double yc = y0 + (wall - v0) / (v1 - v0) * (y1 - y0);
    return seg(y0, yc, v0, wall) + seg(yc, y1, wall, v1);
  }
  return seg(y0, y1, v0, v1);
}

// integral of v^2 - max(v - wall, 0)^2 dy
double band_quad_integral(double y0, double y1, double v0, double v1,
                          double wall) {
  auto seg = [&](double a, double b, double va, double vb) {
    double len = b - a;
    if (len <= 0) return 0.0;
    if (0.5 * (va + vb) <= wall) // entire sub-segment solid to the axis
      return len * (va * va + va * vb + vb * vb) / 3.0;
    return wall * len * (va + vb - wall);
  };
  if ((v0 - wall) * (v1 - wall) < 0.0) {
    double yc = y0 + (wall - v0) / (v1 - v0) * (y1 - y0);
    return seg(y0, yc, v0, wall) + seg(yc, y1, wall, v1);
  }
  return seg(y0, y1, v0, v1);
}

// ---- small convex polygon helpers in 2d (used by the tetra volume) ----

using Poly2 = std::vector<Eigen::Vector2d>;

// keep the side where n.p <= c
Poly2 clip_halfplane(const Poly2& poly, const Eigen::Vector2d& n, double c) {
  Poly2 out;
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % m];
    double da = n.dot(a) - c, db = n.dot(b) - c;
    if (da <= 0) out.push_back(a);
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
      double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

double poly_area(const Poly2& p) {
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

Eigen::Vector2d poly_centroid(const Poly2& p) {
  double a6 = 0;
  Eigen::Vector2d c(0, 0);
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % p.size()];
    double w = u.x() * v.y() - v.x() * u.y();
    a6 += w;
    c += w * (u + v);
  }
  if (std::abs(a6) < 1e-300) return p.empty() ? Eigen::Vector2d(0, 0) : p[0];
  return c / (3.0 * a6);
}

// tetra slant thickness F(y,z) = fa + fb*y + fc*z on its (y,z) domain
struct TetraField {
  double fa, fb, fc;
  double at(double y, double z) const { return fa + fb * y + fc * z; }
};

TetraField tetra_field(const TetraDesc& t) {
  return {t.legX * (1.0 + t.yBase / t.legH + t.zBase / t.legZ),
          -t.legX / t.legH, -t.legX / t.legZ};
}

double tetra_z_top(const TetraDesc& t, double y) {
  return t.zBase + t.legZ * (1.0 - (y - t.yBase) / t.legH);
}

Poly2 tetra_domain(const TetraDesc& t) {
  Poly2 p;
  p.push_back({t.y0, t.zBase});
  p.push_back({t.y1, t.zBase});
  double zt1 = tetra_z_top(t, t.y1);
  double zt0 = tetra_z_top(t, t.y0);
  if (zt1 > t.zBase + 1e-12) p.push_back({t.y1, zt1});
  p.push_back({t.y0, zt0});
  return p;
}

double tetra_max_thickness(const TetraDesc& t) {
  return t.legX * (1.0 - (t.y0 - t.yBase) / t.legH);
}

// ---- normalization on construction / split ----

RampDesc norm_ramp(RampDesc r) {
  r.wall = std::min(r.wall, std::max(r.w0, r.w1));
  return r;
}

RevolveDesc norm_revolve(RevolveDesc r) {
  r.wall = std::min(r.wall, std::max(r.out0, r.out1));
  return r;
}

TetraDesc norm_tetra(TetraDesc t) {
  t.wall = std::min(t.wall, tetra_max_thickness(t));
  return t;
}

// child of a profile band: outer surface pulled inward by cOff, thickness th
void band_child(double& y0, double& y1, double& v0, double& v1, double cOff,
                double th) {
  double n0 = v0 - cOff, n1 = v1 - cOff;
  if (n0 <= 0.0 && n1 <= 0.0) {
    // cannot happen for valid sizes; keep a degenerate sliver at the max end
    n0 = std::max(n0, 0.0);
    n1 = std::max(n1, 0.0);
  } else if (n0 < 0.0) {
    double yc = y0 + (0.0 - n0) / (n1 - n0) * (y1 - y0);
    y0 = yc;
    n0 = 0.0;
  } else if (n1 < 0.0) {
    double yc = y0 + (0.0 - n0) / (n1 - n0) * (y1 - y0);
    y1 = yc;
    n1 = 0.0;
  }
  v0 = n0;
  v1 = n1;
  (void)th;
}

} // namespace

// ---- naming tables ----

const char* axis_name(Axis a) {
  switch (a) {
  case Axis::x: return "x";
  case Axis::y: return "y";
  case Axis::z: return "z";
  case Axis::r: return "r";
  case Axis::theta: return "theta";
  case Axis::phi: return "phi";
  }
  return "?";
}

std::optional<Axis> axis_from_name(const std::string& name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  if (name == "r") return Axis::r;
  if (name == "theta") return Axis::theta;
  if (name == "phi") return Axis::phi;
  return std::nullopt;
}

CoordSystem coord_system(BaseFamily base) {
  switch (base) {
  case BaseFamily::box:
  case BaseFamily::ramp:
  case BaseFamily::tetra: return CoordSystem::euclidean;
  case BaseFamily::cylinder:
  case BaseFamily::cone: return CoordSystem::cylindrical;
  case BaseFamily::sphere: return CoordSystem::spherical;
  }
  return CoordSystem::euclidean;
}

namespace {
struct KindName {
  PrimitiveKind kind;
  const char* name;
  const char* camel;
};
const KindName kKindNames[] = {
    {PrimitiveKind::box, "box", "Box"},
    {PrimitiveKind::ramp, "ramp", "Ramp"},
    {PrimitiveKind::ramp_frustum_x, "ramp-frustum-x", "RampFrustumX"},
    {PrimitiveKind::ramp_frustum_y, "ramp-frustum-y", "RampFrustumY"},
    {PrimitiveKind::cylinder, "cylinder", "Cylinder"},
    {PrimitiveKind::cylinder_sector, "cylinder-sector", "CylinderSector"},
    {PrimitiveKind::ring, "ring", "Ring"},
    {PrimitiveKind::ring_sector, "ring-sector", "RingSector"},
    {PrimitiveKind::cone, "cone", "Cone"},
    {PrimitiveKind::cone_sector, "cone-sector", "ConeSector"},
    {PrimitiveKind::conicfrustum, "conicfrustum", "ConicFrustum"},
    {PrimitiveKind::frustum_sector, "frustum-sector", "FrustumSector"},
    {PrimitiveKind::hollow_frustum, "hollow-frustum", "HollowFrustum"},
    {PrimitiveKind::tetrahedron, "tetrahedron", "Tetrahedron"},
    {PrimitiveKind::tetra_frustum, "tetra-frustum", "TetraFrustum"},
    {PrimitiveKind::tetra_frustum_sector, "tetra-frustum-sector",
     "TetraFrustumSector"},
    {PrimitiveKind::sphere, "sphere", "Sphere"},
    {PrimitiveKind::sphere_shell, "sphere-shell", "SphereShell"},
    {PrimitiveKind::sphere_wedge, "sphere-wedge", "SphereWedge"},
};
} // namespace

const char* kind_name(PrimitiveKind k) {
  for (const auto& e : kKindNames)
    if (e.kind == k) return e.name;
  return "?";
}

std::optional<PrimitiveKind> kind_from_name(const std::string& name) {
  for (const auto& e : kKindNames)
    if (name == e.name) return e.kind;
  return std::nullopt;
}

// ---- appearance ----

void AppearanceRecord::set(const std::string& key, AppearanceValue v) {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), key,
      [](const auto& e, const std::string& k) { return e.first < k; });
  if (it != entries.end() && it->first == key)
    it->second = std::move(v);
  else
    entries.insert(it, {key, std::move(v)});
}

const AppearanceValue* AppearanceRecord::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.first == key) return &e.second;
  return nullptr;
}

std::string AppearanceRecord::serialize() const {
  std::string s;
  for (const auto& [k, v] : entries) {
    s += k;
    s += '=';
    if (v.isString) {
      s += v.str;
    } else {
      for (double d : v.nums) {
        char buf[32];
        snprintf(buf, sizeof buf, "%.17g,", d);
        s += buf;
      }
    }
    s += ';';
  }
  return s;
}

uint64_t AppearanceRecord::hash() const {
  std::string s = serialize();
  uint64_t h = 1469598103934665603ull; // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---- classification ----

PrimitiveKind classify(const PrimitiveDescriptor& d) {
  switch (d.base) {
  case BaseFamily::box: return PrimitiveKind::box;
  case BaseFamily::ramp: {
    const auto& r = std::get<RampDesc>(d.geo);
    double maxW = std::max(r.w0, r.w1);
    bool solid = r.wall >= maxW - len_eps(maxW);
    if (!solid) return PrimitiveKind::ramp_frustum_x;
    if (std::min(r.w0, r.w1) <= len_eps(maxW)) return PrimitiveKind::ramp;
    return PrimitiveKind::ramp_frustum_y;
  }
  case BaseFamily::tetra: {
    const auto& t = std::get<TetraDesc>(d.geo);
    double maxF = tetra_max_thickness(t);
    bool solid = t.wall >= maxF - len_eps(maxF);
    if (!solid) return PrimitiveKind::tetra_frustum_sector;
    bool apex = t.y1 >= t.yBase + t.legH - len_eps(t.legH);
    return apex ? PrimitiveKind::tetrahedron : PrimitiveKind::tetra_frustum;
  }
  case BaseFamily::cylinder: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    double maxR = std::max(r.out0, r.out1);
    bool solid = r.wall >= maxR - len_eps(maxR);
    bool full = (r.theta1 - r.theta0) >= kTwoPi - 1e-9;
    if (solid) return full ? PrimitiveKind::cylinder : PrimitiveKind::cylinder_sector;
    return full ? PrimitiveKind::ring : PrimitiveKind::ring_sector;
  }
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    double maxR = std::max(r.out0, r.out1);
    bool solid = r.wall >= maxR - len_eps(maxR);
    bool full = (r.theta1 - r.theta0) >= kTwoPi - 1e-9;
    bool apex = std::min(r.out0, r.out1) <= len_eps(maxR);
    if (!solid) return PrimitiveKind::hollow_frustum;
    if (apex) return full ? PrimitiveKind::cone : PrimitiveKind::cone_sector;
    return full ? PrimitiveKind::conicfrustum : PrimitiveKind::frustum_sector;
  }
  case BaseFamily::sphere: {
    const auto& s = std::get<SphereDesc>(d.geo);
    bool fullTheta = (s.theta1 - s.theta0) >= kTwoPi - 1e-9;
    bool fullPhi = (s.phi1 - s.phi0) >= kPi - 1e-9;
    if (fullTheta && fullPhi)
      return s.r0 <= len_eps(s.r1) ? PrimitiveKind::sphere
                                   : PrimitiveKind::sphere_shell;
    return PrimitiveKind::sphere_wedge;
  }
  }
  return PrimitiveKind::box;
}

// ---- constructors ----

namespace {

void check_arity(const std::vector<double>& p, size_t n, const char* kind) {
  if (p.size() != n)
    fail("arity-mismatch", std::string(kind) + " expects " +
                               std::to_string(n) + " parameters, got " +
                               std::to_string(p.size()));
}

void check_theta_span(double span) {
  if (!(span > 0.0) || span > kTwoPi + 1e-9)
    fail("angle-out-of-range", "theta span must be in (0, 2*pi]");
}

void check_phi_range(double p0, double p1) {
  if (!(p1 > p0) || p0 < -1e-9 || p1 > kPi + 1e-9)
    fail("angle-out-of-range", "phi interval must lie inside [0, pi]");
}

} // namespace

Shape make_primitive(PrimitiveKind kind, const std::vector<double>& params) {
  Shape s;
  PrimitiveDescriptor& d = s.desc;
  const auto& p = params;
  switch (kind) {
  case PrimitiveKind::box: {
    check_arity(p, 3, "box");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    d.base = BaseFamily::box;
    d.geo = BoxDesc{-p[0] / 2, p[0] / 2, -p[1] / 2, p[1] / 2, -p[2] / 2, p[2] / 2};
    break;
  }
  case PrimitiveKind::ramp: {
    check_arity(p, 3, "ramp");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    d.base = BaseFamily::ramp;
    d.geo = RampDesc{-p[0] / 2, -p[1] / 2, p[1] / 2, p[0], 0.0,
                     p[0],      -p[2] / 2, p[2] / 2};
    break;
  }
  case PrimitiveKind::ramp_frustum_y: {
    check_arity(p, 4, "ramp-frustum-y");
    check_positive(p[0], "bottom width");
    check_positive(p[1], "top width");
    check_positive(p[2], "height");
    check_positive(p[3], "depth");
    double maxW = std::max(p[0], p[1]);
    d.base = BaseFamily::ramp;
    d.geo = RampDesc{-maxW / 2, -p[2] / 2, p[2] / 2, p[0], p[1],
                     maxW,      -p[3] / 2, p[3] / 2};
    break;
  }
  case PrimitiveKind::ramp_frustum_x: {
    check_arity(p, 4, "ramp-frustum-x");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    check_positive(p[3], "wall");
    if (p[3] >= p[0])
      fail("non-positive-dimension", "wall must be smaller than width");
    d.base = BaseFamily::ramp;
    d.geo = RampDesc{-p[0] / 2, -p[1] / 2, p[1] / 2, p[0], 0.0,
                     p[3],      -p[2] / 2, p[2] / 2};
    break;
  }
  case PrimitiveKind::cylinder: {
    check_arity(p, 2, "cylinder");
    check_positive(p[0], "radius");
    check_positive(p[1], "height");
    d.base = BaseFamily::cylinder;
    d.geo = RevolveDesc{-p[1] / 2, p[1] / 2, p[0], p[0], p[0], 0.0, kTwoPi};
    break;
  }
  case PrimitiveKind::cylinder_sector: {
    check_arity(p, 4, "cylinder-sector");
    check_positive(p[0], "radius");
    check_positive(p[1], "height");
    check_theta_span(p[3] - p[2]);
    d.base = BaseFamily::cylinder;
    d.geo = RevolveDesc{-p[1] / 2, p[1] / 2, p[0], p[0], p[0], p[2], p[3]};
    break;
  }
  case PrimitiveKind::ring: {
    check_arity(p, 3, "ring");
    check_positive(p[0], "inner radius");
    check_positive(p[1] - p[0], "radial thickness");
    check_positive(p[2], "height");
    d.base = BaseFamily::cylinder;
    d.geo = RevolveDesc{-p[2] / 2, p[2] / 2, p[1], p[1], p[1] - p[0], 0.0, kTwoPi};
    break;
  }
  case PrimitiveKind::ring_sector: {
    check_arity(p, 5, "ring-sector");
    check_positive(p[0], "inner radius");
    check_positive(p[1] - p[0], "radial thickness");
    check_positive(p[2], "height");
    check_theta_span(p[4] - p[3]);
    d.base = BaseFamily::cylinder;
    d.geo = RevolveDesc{-p[2] / 2, p[2] / 2, p[1], p[1], p[1] - p[0], p[3], p[4]};
    break;
  }
  case PrimitiveKind::cone: {
    check_arity(p, 2, "cone");
    check_positive(p[0], "radius");
    check_positive(p[1], "height");
    d.base = BaseFamily::cone;
    d.geo = RevolveDesc{-p[1] / 2, p[1] / 2, p[0], 0.0, p[0], 0.0, kTwoPi};
    break;
  }
  case PrimitiveKind::cone_sector: {
    check_arity(p, 4, "cone-sector");
    check_positive(p[0], "radius");
    check_positive(p[1], "height");
    check_theta_span(p[3] - p[2]);
    d.base = BaseFamily::cone;
    d.geo = RevolveDesc{-p[1] / 2, p[1] / 2, p[0], 0.0, p[0], p[2], p[3]};
    break;
  }
  case PrimitiveKind::conicfrustum: {
    check_arity(p, 3, "conicfrustum");
    if (p[0] < 0) fail("non-positive-dimension", "top radius must be >= 0");
    check_positive(p[1], "bottom radius");
    check_positive(p[2], "height");
    d.base = BaseFamily::cone;
    d.geo = RevolveDesc{-p[2] / 2, p[2] / 2, p[1],
                        p[0],      std::max(p[0], p[1]), 0.0, kTwoPi};
    break;
  }
  case PrimitiveKind::frustum_sector: {
    check_arity(p, 5, "frustum-sector");
    if (p[0] < 0) fail("non-positive-dimension", "top radius must be >= 0");
    check_positive(p[1], "bottom radius");
    check_positive(p[2], "height");
    check_theta_span(p[4] - p[3]);
    d.base = BaseFamily::cone;
    d.geo = RevolveDesc{-p[2] / 2, p[2] / 2, p[1],
                        p[0],      std::max(p[0], p[1]), p[3], p[4]};
    break;
  }
  case PrimitiveKind::hollow_frustum: {
    check_arity(p, 4, "hollow-frustum");
    if (p[0] < 0) fail("non-positive-dimension", "top radius must be >= 0");
    check_positive(p[1], "bottom radius");
    check_positive(p[2], "height");
    check_positive(p[3], "wall");
    if (p[3] >= std::max(p[0], p[1]))
      fail("non-positive-dimension", "wall must be smaller than the radius");
    d.base = BaseFamily::cone;
    d.geo = RevolveDesc{-p[2] / 2, p[2] / 2, p[1], p[0], p[3], 0.0, kTwoPi};
    break;
  }
  case PrimitiveKind::tetrahedron: {
    check_arity(p, 3, "tetrahedron");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    d.base = BaseFamily::tetra;
    d.geo = TetraDesc{-p[0] / 2, -p[1] / 2, -p[2] / 2, p[0],    p[1],
                      p[2],      -p[1] / 2, p[1] / 2,  p[0]};
    break;
  }
  case PrimitiveKind::tetra_frustum: {
    check_arity(p, 4, "tetra-frustum");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    check_positive(p[3], "kept height");
    if (p[3] >= p[1])
      fail("non-positive-dimension", "kept height must be below the apex");
    d.base = BaseFamily::tetra;
    d.geo = TetraDesc{-p[0] / 2, -p[3] / 2, -p[2] / 2, p[0],    p[1],
                      p[2],      -p[3] / 2, p[3] / 2,  p[0]};
    break;
  }
  case PrimitiveKind::tetra_frustum_sector: {
    check_arity(p, 4, "tetra-frustum-sector");
    check_positive(p[0], "width");
    check_positive(p[1], "height");
    check_positive(p[2], "depth");
    check_positive(p[3], "wall");
    if (p[3] >= p[0])
      fail("non-positive-dimension", "wall must be smaller than width");
    d.base = BaseFamily::tetra;
    d.geo = TetraDesc{-p[0] / 2, -p[1] / 2, -p[2] / 2, p[0],    p[1],
                      p[2],      -p[1] / 2, p[1] / 2,  p[3]};
    break;
  }
  case PrimitiveKind::sphere: {
    check_arity(p, 1, "sphere");
    check_positive(p[0], "radius");
    d.base = BaseFamily::sphere;
    d.geo = SphereDesc{0.0, p[0], 0.0, kTwoPi, 0.0, kPi};
    break;
  }
  case PrimitiveKind::sphere_shell: {
    check_arity(p, 2, "sphere-shell");
    check_positive(p[0], "inner radius");
    check_positive(p[1] - p[0], "shell thickness");
    d.base = BaseFamily::sphere;
    d.geo = SphereDesc{p[0], p[1], 0.0, kTwoPi, 0.0, kPi};
    break;
  }
  case PrimitiveKind::sphere_wedge: {
    check_arity(p, 5, "sphere-wedge");
    check_positive(p[0], "radius");
    check_theta_span(p[2] - p[1]);
    check_phi_range(p[3], p[4]);
    d.base = BaseFamily::sphere;
    d.geo = SphereDesc{0.0, p[0], p[1], p[2], p[3], p[4]};
    break;
  }
  }
  if (auto* rd = std::get_if<RampDesc>(&d.geo)) *rd = norm_ramp(*rd);
  if (auto* vd = std::get_if<RevolveDesc>(&d.geo)) *vd = norm_revolve(*vd);
  if (auto* td = std::get_if<TetraDesc>(&d.geo)) *td = norm_tetra(*td);
  return s;
}

Shape make_primitive(const std::string& kind, const std::vector<double>& params) {
  auto k = kind_from_name(kind);
  if (!k) fail("unknown-kind", "unknown primitive kind '" + kind + "'");
  return make_primitive(*k, params);
}

CoordSystem coord_system(const Shape& s) { return coord_system(s.desc.base); }

// ---- volumes ----

double descriptor_volume(const PrimitiveDescriptor& d) {
  switch (d.base) {
  case BaseFamily::box: {
    const auto& b = std::get<BoxDesc>(d.geo);
    return (b.x1 - b.x0) * (b.y1 - b.y0) * (b.z1 - b.z0);
  }
  case BaseFamily::ramp: {
    const auto& r = std::get<RampDesc>(d.geo);
    return (r.z1 - r.z0) * band_area(r.y0, r.y1, r.w0, r.w1, r.wall);
  }
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    return 0.5 * (r.theta1 - r.theta0) *
           band_quad_integral(r.y0, r.y1, r.out0, r.out1, r.wall);
  }
  case BaseFamily::tetra: {
    const auto& t = std::get<TetraDesc>(d.geo);
    TetraField f = tetra_field(t);
    Poly2 dom = tetra_domain(t);
    if (dom.size() < 3) return 0.0;
    Eigen::Vector2d n(f.fb, f.fc);
    // region where F >= wall contributes wall, the rest contributes F
    Poly2 shallow = clip_halfplane(dom, n, t.wall - f.fa);   // F <= wall
    Poly2 deep = clip_halfplane(dom, -n, -(t.wall - f.fa)); // F >= wall
    double v = 0;
    if (deep.size() >= 3) v += t.wall * std::abs(poly_area(deep));
    if (shallow.size() >= 3) {
      Eigen::Vector2d c = poly_centroid(shallow);
      v += std::abs(poly_area(shallow)) * f.at(c.x(), c.y());
    }
    return v;
  }
  case BaseFamily::sphere: {
    const auto& s = std::get<SphereDesc>(d.geo);
    return (s.r1 * s.r1 * s.r1 - s.r0 * s.r0 * s.r0) / 3.0 *
           (s.theta1 - s.theta0) * (std::cos(s.phi0) - std::cos(s.phi1));
  }
  }
  return 0.0;
}

double shape_volume(const Shape& s) {
  if (s.hasMesh()) return mesh_volume(*s.meshPayload);
  return descriptor_volume(s.desc) * s.frame.scale.prod();
}

// ---- local bounds ----

namespace {

// bounds of {r*(cos t, sin t) : r in [r0,r1], t in [t0,t1]} in the plane
void arc_band_bounds(double r0, double r1, double t0, double t1, double& xmin,
                     double& xmax, double& zmin, double& zmax) {
  xmin = zmin = 1e300;
  xmax = zmax = -1e300;
  auto add = [&](double r, double t) {
    double x = r * std::cos(t), z = r * std::sin(t);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  };
  for (double r : {r0, r1}) {
    add(r, t0);
    add(r, t1);
  }
  double k0 = std::ceil(t0 / (kPi / 2) - 1e-12);
  for (double k = k0; k * (kPi / 2) <= t1 + 1e-12; k += 1) {
    for (double r : {r0, r1}) add(r, k * (kPi / 2));
  }
}

} // namespace

Eigen::AlignedBox3d local_bounds(const PrimitiveDescriptor& d) {
  Eigen::AlignedBox3d b;
  switch (d.base) {
  case BaseFamily::box: {
    const auto& x = std::get<BoxDesc>(d.geo);
    b.extend(Eigen::Vector3d(x.x0, x.y0, x.z0));
    b.extend(Eigen::Vector3d(x.x1, x.y1, x.z1));
    break;
  }
  case BaseFamily::ramp: {
    const auto& r = std::get<RampDesc>(d.geo);
    double innerMin = std::max(std::min(r.w0, r.w1) - r.wall, 0.0);
    b.extend(Eigen::Vector3d(r.xBack + innerMin, r.y0, r.z0));
    b.extend(Eigen::Vector3d(r.xBack + std::max(r.w0, r.w1), r.y1, r.z1));
    break;
  }
  case BaseFamily::tetra: {
    const auto& t = std::get<TetraDesc>(d.geo);
    b.extend(Eigen::Vector3d(t.xBack, t.y0, t.zBase));
    b.extend(Eigen::Vector3d(t.xBack + tetra_max_thickness(t), t.y1,
                             tetra_z_top(t, t.y0)));
    break;
  }
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    double maxOut = std::max(r.out0, r.out1);
    double minInner = std::max(std::min(r.out0, r.out1) - r.wall, 0.0);
    double xmin, xmax, zmin, zmax;
    arc_band_bounds(minInner, maxOut, r.theta0, r.theta1, xmin, xmax, zmin, zmax);
    b.extend(Eigen::Vector3d(xmin, r.y0, zmin));
    b.extend(Eigen::Vector3d(xmax, r.y1, zmax));
    break;
  }
  case BaseFamily::sphere: {
    const auto& s = std::get<SphereDesc>(d.geo);
    double sinMin = std::min(std::sin(s.phi0), std::sin(s.phi1));
    double sinMax = (s.phi0 <= kPi / 2 && s.phi1 >= kPi / 2)
                        ? 1.0
                        : std::max(std::sin(s.phi0), std::sin(s.phi1));
    double xmin, xmax, zmin, zmax;
    arc_band_bounds(s.r0 * sinMin, s.r1 * sinMax, s.theta0, s.theta1, xmin,
                    xmax, zmin, zmax);
    double ymin = 1e300, ymax = -1e300;
    for (double r : {s.r0, s.r1})
      for (double p : {s.phi0, s.phi1}) {
        ymin = std::min(ymin, r * std::cos(p));
        ymax = std::max(ymax, r * std::cos(p));
      }
    b.extend(Eigen::Vector3d(xmin, ymin, zmin));
    b.extend(Eigen::Vector3d(xmax, ymax, zmax));
    break;
  }
  }
  return b;
}

// ---- split / repeat ----

namespace {

bool axis_valid(BaseFamily base, Axis axis) {
  switch (coord_system(base)) {
  case CoordSystem::euclidean:
    return axis == Axis::x || axis == Axis::y || axis == Axis::z;
  case CoordSystem::cylindrical:
    return axis == Axis::r || axis == Axis::theta || axis == Axis::y;
  case CoordSystem::spherical:
    return axis == Axis::r || axis == Axis::theta || axis == Axis::phi;
  }
  return false;
}

double axis_scale(const Shape& s, Axis axis) {
  switch (axis) {
  case Axis::x:
  case Axis::r: return s.frame.scale.x();
  case Axis::y: return s.frame.scale.y();
  case Axis::z: return s.frame.scale.z();
  case Axis::theta:
  case Axis::phi: return 1.0;
  }
  return 1.0;
}

double local_axis_extent(const PrimitiveDescriptor& d, Axis axis) {
  switch (d.base) {
  case BaseFamily::box: {
    const auto& b = std::get<BoxDesc>(d.geo);
    if (axis == Axis::x) return b.x1 - b.x0;
    if (axis == Axis::y) return b.y1 - b.y0;
    return b.z1 - b.z0;
  }
  case BaseFamily::ramp: {
    const auto& r = std::get<RampDesc>(d.geo);
    if (axis == Axis::x) return r.wall;
    if (axis == Axis::y) return r.y1 - r.y0;
    return r.z1 - r.z0;
  }
  case BaseFamily::tetra: {
    const auto& t = std::get<TetraDesc>(d.geo);
    if (axis == Axis::x) return t.wall;
    return t.y1 - t.y0;
  }
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    if (axis == Axis::r) return r.wall;
    if (axis == Axis::theta) return r.theta1 - r.theta0;
    return r.y1 - r.y0;
  }
  case BaseFamily::sphere: {
    const auto& s = std::get<SphereDesc>(d.geo);
    if (axis == Axis::r) return s.r1 - s.r0;
    if (axis == Axis::theta) return s.theta1 - s.theta0;
    return s.phi1 - s.phi0;
  }
  }
  return 0.0;
}

// bounds: ascending offsets from the interval start, bounds[0] == 0
std::vector<PrimitiveDescriptor> partition_descriptor(
    const PrimitiveDescriptor& d, Axis axis, const std::vector<double>& bounds) {
  size_t n = bounds.size() - 1;
  std::vector<PrimitiveDescriptor> out(n, d);
  switch (d.base) {
  case BaseFamily::box: {
    const auto& b = std::get<BoxDesc>(d.geo);
    for (size_t i = 0; i < n; ++i) {
      BoxDesc c = b;
      if (axis == Axis::x) {
        c.x0 = b.x0 + bounds[i];
        c.x1 = b.x0 + bounds[i + 1];
      } else if (axis == Axis::y) {
        c.y0 = b.y0 + bounds[i];
        c.y1 = b.y0 + bounds[i + 1];
      } else {
        c.z0 = b.z0 + bounds[i];
        c.z1 = b.z0 + bounds[i + 1];
      }
      out[i].geo = c;
    }
    break;
  }
  case BaseFamily::ramp: {
    const auto& r = std::get<RampDesc>(d.geo);
    for (size_t i = 0; i < n; ++i) {
      RampDesc c = r;
      if (axis == Axis::x) {
        double cOff = r.wall - bounds[i + 1];
        double th = bounds[i + 1] - bounds[i];
        // the material band sits between offsets cOff and cOff+th from the
        // outer slant; re-reference the profile to the child's own outer face
        c.y0 = r.y0;
        c.y1 = r.y1;
        c.w0 = r.w0;
        c.w1 = r.w1;
        band_child(c.y0, c.y1, c.w0, c.w1, cOff, th);
        c.wall = std::min(th, std::max(c.w0, c.w1));
      } else if (axis == Axis::y) {
        double a = r.y0 + bounds[i], b2 = r.y0 + bounds[i + 1];
        c.w0 = lerp_at(r.y0, r.y1, r.w0, r.w1, a);
        c.w1 = lerp_at(r.y0, r.y1, r.w0, r.w1, b2);
        c.y0 = a;
        c.y1 = b2;
        c.wall = std::min(r.wall, std::max(c.w0, c.w1));
      } else {
        c.z0 = r.z0 + bounds[i];
        c.z1 = r.z0 + bounds[i + 1];
      }
      out[i].geo = c;
    }
    break;
  }
  case BaseFamily::tetra: {
    const auto& t = std::get<TetraDesc>(d.geo);
    for (size_t i = 0; i < n; ++i) {
      TetraDesc c = t;
      if (axis == Axis::x) {
        double cOff = t.wall - bounds[i + 1];
        double th = bounds[i + 1] - bounds[i];
        double f = (t.legX - cOff) / t.legX;
        c.legX = t.legX - cOff;
        c.legH = t.legH * f;
        c.legZ = t.legZ * f;
        c.y1 = std::min(t.y1, t.yBase + c.legH);
        c.wall = std::min(th, tetra_max_thickness(c));
      } else {
        c.y0 = t.y0 + bounds[i];
        c.y1 = t.y0 + bounds[i + 1];
        c.wall = std::min(t.wall, tetra_max_thickness(c));
      }
      out[i].geo = c;
    }
    break;
  }
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(d.geo);
    for (size_t i = 0; i < n; ++i) {
      RevolveDesc c = r;
      if (axis == Axis::r) {
        double cOff = r.wall - bounds[i + 1];
        double th = bounds[i + 1] - bounds[i];
        band_child(c.y0, c.y1, c.out0, c.out1, cOff, th);
        c.wall = std::min(th, std::max(c.out0, c.out1));
      } else if (axis == Axis::theta) {
        c.theta0 = r.theta0 + bounds[i];
        c.theta1 = r.theta0 + bounds[i + 1];
      } else {
        double a = r.y0 + bounds[i], b2 = r.y0 + bounds[i + 1];
        c.out0 = lerp_at(r.y0, r.y1, r.out0, r.out1, a);
        c.out1 = lerp_at(r.y0, r.y1, r.out0, r.out1, b2);
        c.y0 = a;
        c.y1 = b2;
        c.wall = std::min(r.wall, std::max(c.out0, c.out1));
      }
      out[i].geo = c;
    }
    break;
  }
  case BaseFamily::sphere: {
    const auto& s = std::get<SphereDesc>(d.geo);
    for (size_t i = 0; i < n; ++i) {
      SphereDesc c = s;
      if (axis == Axis::r) {
        c.r0 = s.r0 + bounds[i];
        c.r1 = s.r0 + bounds[i + 1];
      } else if (axis == Axis::theta) {
        c.theta0 = s.theta0 + bounds[i];
        c.theta1 = s.theta0 + bounds[i + 1];
      } else {
        c.phi0 = s.phi0 + bounds[i];
        c.phi1 = s.phi0 + bounds[i + 1];
      }
      out[i].geo = c;
    }
    break;
  }
  }
  return out;
}

void check_axis(const Shape& s, Axis axis) {
  if (s.hasMesh())
    fail("unsupported-split-axis", "boolean result meshes cannot be split");
  if (!axis_valid(s.desc.base, axis))
    fail("axis-not-in-coordinate-system",
         std::string("axis ") + axis_name(axis) +
             " is not part of the shape's coordinate system");
  if (s.desc.base == BaseFamily::tetra && axis == Axis::z)
    fail("unsupported-split-axis",
         "tetrahedron-family shapes cannot be split along z");
}

} // namespace

double axis_extent(const Shape& s, Axis axis) {
  check_axis(s, axis);
  return local_axis_extent(s.desc, axis) * axis_scale(s, axis);
}

std::vector<Shape> split_shape(const Shape& s, Axis axis,
                               const std::vector<double>& sizes) {
  check_axis(s, axis);
  if (sizes.empty()) fail("non-positive-size", "split needs at least one size");
  double sum = 0;
  for (double sz : sizes) {
    if (!(sz > 0)) fail("non-positive-size", "split sizes must be positive");
    sum += sz;
  }
  double extent = axis_extent(s, axis);
  if (std::abs(sum - extent) > 1e-6 * std::max(std::abs(extent), 1e-30))
    fail("size-sum-mismatch",
         "split sizes sum to " + std::to_string(sum) + " but the " +
             axis_name(axis) + " extent is " + std::to_string(extent));
  double scl = axis_scale(s, axis);
  std::vector<double> bounds(sizes.size() + 1, 0.0);
  double acc = 0;
  for (size_t i = 0; i < sizes.size(); ++i) {
    acc += sizes[i] / scl;
    bounds[i + 1] = acc;
  }
  auto descs = partition_descriptor(s.desc, axis, bounds);
  std::vector<Shape> out;
  out.reserve(descs.size());
  for (auto& d : descs) {
    Shape c = s;
    c.desc = d;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Shape> repeat_shape(const Shape& s, Axis axis,
                                const std::vector<double>& sizes,
                                double offset) {
  check_axis(s, axis);
  if (sizes.empty()) fail("non-positive-size", "repeat needs at least one size");
  double period = 0;
  for (double sz : sizes) {
    if (!(sz > 0)) fail("non-positive-size", "repeat sizes must be positive");
    period += sz;
  }
  if (offset < 0 || offset >= period)
    fail("offset-out-of-range", "offset must satisfy 0 <= offset < sum(sizes)");
  double extent = axis_extent(s, axis);
  // tile boundaries in world units, then clamp to [0, extent]
  std::vector<double> cuts;
  cuts.push_back(0.0);
  double b = -offset;
  size_t i = 0;
  while (b < extent - 1e-9) {
    double nb = b + sizes[i % sizes.size()];
    ++i;
    double upper = std::min(nb, extent);
    if (upper - cuts.back() >= 1e-9) cuts.push_back(upper);
    b = nb;
  }
  if (cuts.size() < 2) cuts.push_back(extent);
  cuts.back() = extent;
  // convert to local offsets as exact fractions so children partition the
  // interval without drift
  double localExtent = local_axis_extent(s.desc, axis);
  std::vector<double> bounds(cuts.size());
  for (size_t k = 0; k < cuts.size(); ++k)
    bounds[k] = localExtent * (cuts[k] / extent);
  bounds.front() = 0.0;
  bounds.back() = localExtent;
  auto descs = partition_descriptor(s.desc, axis, bounds);
  std::vector<Shape> out;
  out.reserve(descs.size());
  for (auto& d : descs) {
    Shape c = s;
    c.desc = d;
    out.push_back(std::move(c));
  }
  return out;
}

// ---- transforms ----

void apply_translate(Shape& s, double tx, double ty, double tz) {
  if (s.hasMesh()) {
    auto m = std::make_shared<TriMesh>(*s.meshPayload);
    for (auto& v : m->verts) v += Eigen::Vector3d(tx, ty, tz);
    s.meshPayload = m;
    return;
  }
  s.frame.trans += Eigen::Vector3d(tx, ty, tz);
}

void apply_rotate(Shape& s, double rx, double ry, double rz) {
  Eigen::Matrix3d R =
      (Eigen::AngleAxisd(rz, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(ry, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(rx, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  if (s.hasMesh()) {
    auto m = std::make_shared<TriMesh>(*s.meshPayload);
    Eigen::AlignedBox3d bb = mesh_bounds(*m);
    Eigen::Vector3d c = bb.center();
    for (auto& v : m->verts) v = R * (v - c) + c;
    s.meshPayload = m;
    return;
  }
  s.frame.rot = R * s.frame.rot;
}

void apply_scale(Shape& s, double sx, double sy, double sz) {
  if (!(sx > 0) || !(sy > 0) || !(sz > 0))
    fail("non-positive-scale", "scale factors must be positive");
  if (s.hasMesh()) {
    auto m = std::make_shared<TriMesh>(*s.meshPayload);
    Eigen::AlignedBox3d bb = mesh_bounds(*m);
    Eigen::Vector3d c = bb.center();
    Eigen::Vector3d f(sx, sy, sz);
    for (auto& v : m->verts) v = c + f.cwiseProduct(v - c);
    s.meshPayload = m;
    return;
  }
  Eigen::Vector3d cL = local_bounds(s.desc).center();
  Eigen::Vector3d before = s.frame.apply(cL);
  s.frame.scale = s.frame.scale.cwiseProduct(Eigen::Vector3d(sx, sy, sz));
  Eigen::Vector3d after = s.frame.apply(cL);
  s.frame.trans += before - after;
}

// ---- bounding box / accessors ----

Shape bounding_box(const Shape& s, int segments) {
  Eigen::AlignedBox3d bb;
  if (s.hasMesh()) {
    bb = mesh_bounds(*s.meshPayload);
  } else {
    TriMesh m = triangulate(s, segments);
    bb = mesh_bounds(m);
  }
  Shape out;
  out.desc.base = BaseFamily::box;
  out.desc.geo = BoxDesc{bb.min().x(), bb.max().x(), bb.min().y(),
                         bb.max().y(), bb.min().z(), bb.max().z()};
  out.appearance = s.appearance;
  return out;
}

std::optional<double> scope_value(const Shape& s, const std::string& name) {
  if (s.hasMesh()) {
    Eigen::AlignedBox3d bb = mesh_bounds(*s.meshPayload);
    if (name == "w") return bb.sizes().x();
    if (name == "h") return bb.sizes().y();
    if (name == "d") return bb.sizes().z();
    return std::nullopt;
  }
  const auto& sc = s.frame.scale;
  Eigen::AlignedBox3d lb = local_bounds(s.desc);
  if (name == "w") return lb.sizes().x() * sc.x();
  if (name == "h") return lb.sizes().y() * sc.y();
  if (name == "d") return lb.sizes().z() * sc.z();
  switch (s.desc.base) {
  case BaseFamily::cylinder:
  case BaseFamily::cone: {
    const auto& r = std::get<RevolveDesc>(s.desc.geo);
    if (name == "r") return std::max(r.out0, r.out1) * sc.x();
    if (name == "theta") return r.theta1 - r.theta0;
    break;
  }
  case BaseFamily::sphere: {
    const auto& sp = std::get<SphereDesc>(s.desc.geo);
    if (name == "r") return sp.r1 * sc.x();
    if (name == "theta") return sp.theta1 - sp.theta0;
    if (name == "phi") return sp.phi1 - sp.phi0;
    break;
  }
  default: break;
  }
  return std::nullopt;
}

bool instance_of(const Shape& s, const std::string& className) {
  if (s.hasMesh()) return false;
  if (className == "CartesianShape")
    return coord_system(s) == CoordSystem::euclidean;
  if (className == "RotaryShape")
    return coord_system(s) == CoordSystem::cylindrical;
  if (className == "SphericalShape")
    return coord_system(s) == CoordSystem::spherical;
  PrimitiveKind k = classify(s.desc);
  for (const auto& e : kKindNames)
    if (e.kind == k && className == e.camel) return true;
  return false;
}

} // namespace psml
