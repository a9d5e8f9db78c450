#pragma once

#include <string>
#include <vector>

#include "psml/parse_tree.hpp"

namespace psml {

struct ExportOptions {
  int segments = 32;
  bool includeVoids = false;
};

struct ExportSummary {
  int visibleTerminals = 0;
  int voidTerminals = 0;
  int vertexCount = 0;
  int faceCount = 0;
  bool voidsFileWritten = false;
};

// Writes <stem>.obj and <stem>.mtl, plus <stem>.voids.obj when requested and
// void terminals exist. Output is y-up; floats use shortest round-trip
// formatting and groups follow tree order, so identical runs produce
// byte-identical files. Files are written to a temp path, then renamed.
ExportSummary write_obj(const SGNode& root, const std::string& stem,
                        const ExportOptions& options);

// Writes <stem>.stats.txt (aligned table) and <stem>.stats.csv with header
// pattern,count,volume. Empty pattern list groups terminals by leaf symbol.
void write_stats(SGNode& root, const std::string& stem,
                 const std::vector<std::string>& patterns);

}  // namespace psml
