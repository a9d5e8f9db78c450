#pragma once

#include <string>
#include <vector>

#include "psml/csg.hpp"
#include "psml/parse_tree.hpp"

namespace psml {

// Shape path matching. The pattern is '/'-separated elements; a node matches
// when the elements map, in order, onto distinct segments of the node's
// ancestry with each element contained in its segment as a substring.
// Matching runs over searchRoot's subtree; a leading '/' selects globalRoot
// instead. Deleted nodes are excluded. Results are in pre-order.
std::vector<SGNode*> resolve_path(SGNode& searchRoot, SGNode& globalRoot,
                                  const std::string& pattern);

// Detached copies of every matched node's shape.
std::vector<Shape> instances_query(SGNode& searchRoot, SGNode& globalRoot,
                                   const std::string& pattern);

// References to the terminal descendants (including matched terminals
// themselves) of all matched nodes, deduplicated, in pre-order.
std::vector<SGNode*> terminals_query(SGNode& searchRoot, SGNode& globalRoot,
                                     const std::string& pattern);

// One operand of a geometric boolean: either detached copies or references
// to terminal nodes. Exactly one of the two lists is used.
struct ShapeSet {
  std::vector<Shape>* copies = nullptr;
  std::vector<SGNode*>* nodes = nullptr;
  bool refs() const { return nodes != nullptr; }
};

// Applies a boolean between shape sets.
//   copies (x) anything   -> returns one new detached mesh shape
//   refs   (x) copies     -> each referenced node's shape is replaced
//   refs   (x) refs       -> left nodes replaced; for union/intersect the
//                            right nodes are deleted from the tree
// Nodes whose result is empty keep an empty mesh payload. The returned list
// is empty when the target is a reference set.
std::vector<Shape> geometric_boolean(ShapeSet a, ShapeSet b, BooleanOp op,
                                     int segments);

struct StatsRow {
  std::string pattern;
  int count = 0;
  double volume = 0.0;
};

// With patterns: one row per pattern, counting the terminal descendants of
// its matches (row order follows the input). Without patterns: one row per
// leaf symbol over all terminals, ordered by descending volume then name.
std::vector<StatsRow> collect_stats(SGNode& root,
                                    const std::vector<std::string>& patterns);

}  // namespace psml
