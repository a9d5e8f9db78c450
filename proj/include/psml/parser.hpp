#pragma once

#include <string>

#include "psml/ast.hpp"
#include "psml/token.hpp"

namespace psml {

// Parses one grammar source file. fileName is used for diagnostics and to
// check that the declared class name matches the file stem.
ast::Program parse_program(const std::string& source, const std::string& fileName);

ast::AttributeFile parse_attributes(const std::string& source, const std::string& fileName);

// Regenerates source text from the tree; parsing the result yields a tree
// with an identical dump.
std::string pretty_print(const ast::Program& program);

// Canonical structural serialization, used for tree equality checks.
std::string dump_tree(const ast::Program& program);

}  // namespace psml
