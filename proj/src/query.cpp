#include <algorithm>
#include <map>
#include <set>

#include "psml/query.hpp"
#include "psml/trimesh.hpp"

namespace psml {

namespace {

std::vector<std::string> split_pattern(const std::string& pattern) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : pattern) {
    if (c == '/') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// DFS carrying the greedy count of pattern elements already placed on the
// ancestry. Earliest placement is optimal for subsequence existence, so a
// node matches exactly when every element has been placed.
void match_walk(SGNode& node, const std::vector<std::string>& elems, size_t placed,
                std::vector<SGNode*>& out) {
  if (node.deleted) return;
  if (!node.symbol.empty()) {
    if (placed < elems.size() &&
        node.symbol.find(elems[placed]) != std::string::npos)
      ++placed;
  }
  if (placed == elems.size()) out.push_back(&node);
  for (auto& c : node.children) match_walk(*c, elems, placed, out);
}

void collect_terminals(SGNode& node, std::set<SGNode*>& seen,
                       std::vector<SGNode*>& out) {
  if (node.deleted) return;
  if (node.terminal) {
    if (seen.insert(&node).second) out.push_back(&node);
    return;
  }
  for (auto& c : node.children) collect_terminals(*c, seen, out);
}

}  // namespace

std::vector<SGNode*> resolve_path(SGNode& searchRoot, SGNode& globalRoot,
                                  const std::string& pattern) {
  std::string pat = pattern;
  SGNode* space = &searchRoot;
  if (!pat.empty() && pat.front() == '/') {
    space = &globalRoot;
    pat.erase(pat.begin());
  }
  std::vector<SGNode*> out;
  match_walk(*space, split_pattern(pat), 0, out);
  return out;
}

std::vector<Shape> instances_query(SGNode& searchRoot, SGNode& globalRoot,
                                   const std::string& pattern) {
  std::vector<Shape> out;
  for (SGNode* n : resolve_path(searchRoot, globalRoot, pattern))
    out.push_back(n->shape);
  return out;
}

std::vector<SGNode*> terminals_query(SGNode& searchRoot, SGNode& globalRoot,
                                     const std::string& pattern) {
  std::vector<SGNode*> out;
  std::set<SGNode*> seen;
  for (SGNode* n : resolve_path(searchRoot, globalRoot, pattern))
    collect_terminals(*n, seen, out);
  return out;
}

namespace {

struct MergedOperand {
  TriMesh mesh;
  std::vector<MeshFaceGroup> groups;
};

// Tags every face of the shape's mesh with a group id and appends the
// group descriptions, so face provenance survives the boolean.
void add_shape(MergedOperand& dst, const Shape& shape, const std::string& label,
               int segments) {
  TriMesh m;
  int base = static_cast<int>(dst.groups.size());
  if (shape.hasMesh()) {
    m = *shape.meshPayload;
    if (shape.meshGroups && !shape.meshGroups->empty()) {
      if (m.mats.empty()) m.mats.assign(m.tris.size(), 0);
      for (int& id : m.mats) id += base;
      for (const auto& g : *shape.meshGroups) dst.groups.push_back(g);
    } else {
      m.mats.assign(m.tris.size(), base);
      dst.groups.push_back({label, shape.appearance});
    }
  } else {
    m = triangulate(shape, segments);
    m.mats.assign(m.tris.size(), base);
    dst.groups.push_back({label, shape.appearance});
  }
  if (dst.mesh.tris.empty()) {
    dst.mesh = std::move(m);
  } else {
    dst.mesh = mesh_boolean(dst.mesh, m, BooleanOp::unite);
  }
}

MergedOperand merge_operand(ShapeSet set, int segments) {
  MergedOperand out;
  if (set.refs()) {
    for (SGNode* n : *set.nodes) add_shape(out, n->shape, n->path(), segments);
  } else {
    int i = 0;
    for (const Shape& s : *set.copies) {
      std::string label = s.hasMesh() ? "csg" : kind_name(classify(s.desc));
      if (set.copies->size() > 1) label += "_" + std::to_string(i);
      add_shape(out, s, label, segments);
      ++i;
    }
  }
  return out;
}

Shape mesh_shape(TriMesh mesh, std::vector<MeshFaceGroup> groups,
                 AppearanceRecord appearance, bool isVoid) {
  Shape s;
  s.appearance = std::move(appearance);
  s.isVoid = isVoid;
  s.meshPayload = std::make_shared<TriMesh>(std::move(mesh));
  s.meshGroups = std::make_shared<std::vector<MeshFaceGroup>>(std::move(groups));
  return s;
}

}  // namespace

std::vector<Shape> geometric_boolean(ShapeSet a, ShapeSet b, BooleanOp op,
                                     int segments) {
  MergedOperand rhs = merge_operand(b, segments);
  if (!a.refs()) {
    MergedOperand lhs = merge_operand(a, segments);
    TriMesh rhsMesh = rhs.mesh;
    int base = static_cast<int>(lhs.groups.size());
    if (rhsMesh.mats.empty()) rhsMesh.mats.assign(rhsMesh.tris.size(), 0);
    for (int& id : rhsMesh.mats) id += base;
    std::vector<MeshFaceGroup> groups = lhs.groups;
    groups.insert(groups.end(), rhs.groups.begin(), rhs.groups.end());
    TriMesh result = mesh_boolean(lhs.mesh, rhsMesh, op);
    return {mesh_shape(std::move(result), std::move(groups), {}, false)};
  }

  for (SGNode* n : *a.nodes) {
    MergedOperand lhs;
    add_shape(lhs, n->shape, n->path(), segments);
    TriMesh rhsMesh = rhs.mesh;
    int base = static_cast<int>(lhs.groups.size());
    if (rhsMesh.mats.empty()) rhsMesh.mats.assign(rhsMesh.tris.size(), 0);
    for (int& id : rhsMesh.mats) id += base;
    std::vector<MeshFaceGroup> groups = lhs.groups;
    groups.insert(groups.end(), rhs.groups.begin(), rhs.groups.end());
    TriMesh result = mesh_boolean(lhs.mesh, rhsMesh, op);
    n->shape = mesh_shape(std::move(result), std::move(groups),
                          n->shape.appearance, n->shape.isVoid);
  }
  if (b.refs() && op != BooleanOp::subtract) {
    for (SGNode* n : *b.nodes) n->deleted = true;
  }
  return {};
}

std::vector<StatsRow> collect_stats(SGNode& root,
                                    const std::vector<std::string>& patterns) {
  std::vector<StatsRow> rows;
  if (patterns.empty()) {
    std::map<std::string, StatsRow> bySymbol;
    walk_tree(root, [&](SGNode& n) {
      if (!n.terminal) return;
      StatsRow& row = bySymbol[n.symbol];
      row.pattern = n.symbol;
      row.count += 1;
      row.volume += shape_volume(n.shape);
    });
    for (auto& [sym, row] : bySymbol) rows.push_back(row);
    std::sort(rows.begin(), rows.end(), [](const StatsRow& x, const StatsRow& y) {
      if (x.volume != y.volume) return x.volume > y.volume;
      return x.pattern < y.pattern;
    });
    return rows;
  }
  for (const auto& pat : patterns) {
    StatsRow row;
    row.pattern = pat;
    for (SGNode* t : terminals_query(root, root, pat)) {
      row.count += 1;
      row.volume += shape_volume(t->shape);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace psml
