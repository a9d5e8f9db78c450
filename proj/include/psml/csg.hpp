// Regularized booleans on watertight triangle meshes via BSP clipping,
// with crack repair so results stay watertight.
#pragma once

#include <optional>
#include <string>

#include "psml/trimesh.hpp"

namespace psml {

enum class BooleanOp { unite, subtract, intersect };

std::optional<BooleanOp> op_from_symbol(const std::string& sym); // + - &&

// Material ids on input faces survive into the result, so callers can keep
// per-face provenance across an operation. Results whose volume magnitude
// falls below 1e-12 come back as the canonical empty mesh.
TriMesh mesh_boolean(const TriMesh& a, const TriMesh& b, BooleanOp op);

inline bool mesh_is_empty(const TriMesh& m) { return m.tris.empty(); }

} // namespace psml
