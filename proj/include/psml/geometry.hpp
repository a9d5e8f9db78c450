// Volumetric primitive descriptors, placement frames and the shape operations
// (construction, splits, repeats, transforms, analytic volumes).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace psml {

class GeomError : public std::runtime_error {
public:
  GeomError(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

enum class CoordSystem { euclidean, cylindrical, spherical };

enum class Axis { x, y, z, r, theta, phi };

const char* axis_name(Axis a);
std::optional<Axis> axis_from_name(const std::string& name);

enum class BaseFamily { box, ramp, tetra, cylinder, cone, sphere };

CoordSystem coord_system(BaseFamily base);

// The 19 shape kinds reachable from the six bases via interval splits.
enum class PrimitiveKind {
  box,
  ramp,
  ramp_frustum_x,
  ramp_frustum_y,
  cylinder,
  cylinder_sector,
  ring,
  ring_sector,
  cone,
  cone_sector,
  conicfrustum,
  frustum_sector,
  hollow_frustum,
  tetrahedron,
  tetra_frustum,
  tetra_frustum_sector,
  sphere,
  sphere_shell,
  sphere_wedge,
};

constexpr int kPrimitiveKindCount = 19;

const char* kind_name(PrimitiveKind k); // "ramp-frustum-x", "conicfrustum", ...
std::optional<PrimitiveKind> kind_from_name(const std::string& name);

// Axis-aligned block in local euclidean coordinates.
struct BoxDesc {
  double x0, x1, y0, y1, z0, z1;
};

// Wedge family. The slanted face sits at x = xBack + w(y) with w linear over
// [y0,y1]; the solid occupies the band of thickness `wall` measured along x
// inward from that face, clamped at the back plane x = xBack.
struct RampDesc {
  double xBack;
  double y0, y1;
  double w0, w1; // slant offset from xBack at y0 / y1, >= 0
  double wall;   // 0 < wall <= max(w0, w1)
  double z0, z1;
};

// Corner-tetrahedron family. Slant plane:
//   (x-xBack)/legX + (y-yBase)/legH + (z-zBase)/legZ = 1
// with the solid between that plane and its inward x-offset by `wall`,
// clamped at x = xBack and z = zBase, restricted to y in [y0,y1].
struct TetraDesc {
  double xBack, yBase, zBase;
  double legX, legH, legZ;
  double y0, y1; // yBase <= y0 < y1 <= yBase + legH
  double wall;   // x band thickness
};

// Solid of revolution about the local y axis: cylinders (constant outer
// radius) and cones (linear outer radius). The material band has thickness
// `wall` measured radially inward from the outer profile, clamped at the axis.
struct RevolveDesc {
  double y0, y1;
  double out0, out1; // outer radius at y0 / y1, >= 0, not both 0
  double wall;       // 0 < wall <= max(out0, out1)
  double theta0, theta1;
};

struct SphereDesc {
  double r0, r1;
  double theta0, theta1;
  double phi0, phi1; // polar angle from +y, inside [0, pi]
};

struct PrimitiveDescriptor {
  BaseFamily base = BaseFamily::box;
  std::variant<BoxDesc, RampDesc, TetraDesc, RevolveDesc, SphereDesc> geo =
      BoxDesc{-0.5, 0.5, -0.5, 0.5, -0.5, 0.5};
};

PrimitiveKind classify(const PrimitiveDescriptor& d);

// Rigid placement plus per-local-axis scale. World point of a local point p
// is rot * (scale .* p) + trans.
struct Frame {
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rot * scale.cwiseProduct(p) + trans;
  }
};

struct AppearanceValue {
  bool isString = false;
  std::vector<double> nums;
  std::string str;
};

// Small ordered key/value store; keys kept sorted so serialization and
// hashing are independent of assignment order.
struct AppearanceRecord {
  std::vector<std::pair<std::string, AppearanceValue>> entries;

  void set(const std::string& key, AppearanceValue v);
  const AppearanceValue* find(const std::string& key) const;
  bool empty() const { return entries.empty(); }
  std::string serialize() const;
  uint64_t hash() const;
};

struct TriMesh;

// Per-face provenance for boolean-result meshes: the mesh's material ids
// index into a table of these, so exports can keep source grouping.
struct MeshFaceGroup {
  std::string label;
  AppearanceRecord appearance;
};

struct Shape {
  PrimitiveDescriptor desc;
  Frame frame;
  AppearanceRecord appearance;
  bool isVoid = false;
  // Boolean results carry a world-space mesh instead of a descriptor.
  std::shared_ptr<const TriMesh> meshPayload;
  std::shared_ptr<const std::vector<MeshFaceGroup>> meshGroups;

  bool hasMesh() const { return meshPayload != nullptr; }
};

// Constructors. Base kinds take the documented sizes (box/ramp/tetrahedron
// {w,h,d}; cylinder/cone {r,h}; conicfrustum {rTop,rBottom,h}; sphere {r});
// derived kinds take explicit interval parameters, see docs/language.md.
Shape make_primitive(PrimitiveKind kind, const std::vector<double>& params);
Shape make_primitive(const std::string& kind, const std::vector<double>& params);

CoordSystem coord_system(const Shape& s);

// World-unit extent of the given axis (linear axes include frame scale,
// angular axes are radians). This is the quantity split sizes must sum to.
double axis_extent(const Shape& s, Axis axis);

std::vector<Shape> split_shape(const Shape& s, Axis axis,
                               const std::vector<double>& sizes);

std::vector<Shape> repeat_shape(const Shape& s, Axis axis,
                                const std::vector<double>& sizes,
                                double offset);

void apply_translate(Shape& s, double tx, double ty, double tz);
// Euler rotation applied as Rz(rz) * Ry(ry) * Rx(rx) about the frame origin.
void apply_rotate(Shape& s, double rx, double ry, double rz);
// Scales along the local axes, anchored at the world bounding-box center.
void apply_scale(Shape& s, double sx, double sy, double sz);

double descriptor_volume(const PrimitiveDescriptor& d);
double shape_volume(const Shape& s); // analytic; mesh payloads use mesh_volume

// Local axis-aligned bounds of the descriptor geometry (exact).
Eigen::AlignedBox3d local_bounds(const PrimitiveDescriptor& d);

// World axis-aligned box around the triangulated shape.
Shape bounding_box(const Shape& s, int segments);

// Scope accessor ("w","h","d","r","theta","phi"); empty result for
// accessors meaningless on the shape's family.
std::optional<double> scope_value(const Shape& s, const std::string& name);

// True when the shape is an instance of the named runtime class: a kind name
// in CamelCase ("ConicFrustum") or one of CartesianShape / RotaryShape /
// SphericalShape.
bool instance_of(const Shape& s, const std::string& className);

} // namespace psml
