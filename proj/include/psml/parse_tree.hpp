#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "psml/geometry.hpp"

namespace psml {

// Derivation tree node. The tree root is synthetic with an empty symbol;
// empty symbols are skipped when building paths.
struct SGNode {
  std::string symbol;
  Shape shape;
  bool terminal = false;  // leaf carrying final geometry (real or void)
  bool deleted = false;   // removed by a boolean operation
  SGNode* parent = nullptr;
  std::vector<std::unique_ptr<SGNode>> children;

  SGNode* add_child(std::string childSymbol, Shape childShape) {
    auto node = std::make_unique<SGNode>();
    node->symbol = std::move(childSymbol);
    node->shape = std::move(childShape);
    node->parent = this;
    children.push_back(std::move(node));
    return children.back().get();
  }

  // Ancestry symbols joined by '/', e.g. "Axiom/wall/Bricks/brick".
  std::string path() const {
    std::vector<const SGNode*> chain;
    for (const SGNode* n = this; n; n = n->parent) chain.push_back(n);
    std::string out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      if ((*it)->symbol.empty()) continue;
      if (!out.empty()) out += '/';
      out += (*it)->symbol;
    }
    return out;
  }

  bool isVoidTerminal() const { return terminal && shape.isVoid; }
};

// Pre-order walk over live (non-deleted) nodes.
inline void walk_tree(const SGNode& node, const std::function<void(const SGNode&)>& fn) {
  if (node.deleted) return;
  fn(node);
  for (const auto& c : node.children) walk_tree(*c, fn);
}

inline void walk_tree(SGNode& node, const std::function<void(SGNode&)>& fn) {
  if (node.deleted) return;
  fn(node);
  for (const auto& c : node.children) walk_tree(*c, fn);
}

}  // namespace psml
