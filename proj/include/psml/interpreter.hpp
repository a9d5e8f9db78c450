#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "psml/parse_tree.hpp"

namespace psml {

class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct RunOptions {
  std::uint64_t seed = 0;
  int segments = 32;
  int depthLimit = 10000;
  std::vector<std::string> importDirs;  // searched after the entry file's dir
  std::vector<std::string> attrDirs;
  // Remaps the group argument of useAttributes, e.g. {"sand","rock"}.
  std::map<std::string, std::string> attrGroupOverrides;
};

struct RunResult {
  std::unique_ptr<SGNode> root;  // synthetic root, empty symbol
  int terminalCount = 0;         // visible terminals
  int voidCount = 0;
  double totalVolume = 0.0;      // visible terminals only
};

// Loads the entry grammar (resolving imports), derives main, and returns the
// finished tree. Throws ParseError for malformed sources, RuntimeError for
// derivation failures, GeomError for geometric ones.
RunResult run_program(const std::string& entryFile, const RunOptions& options);

// Same, with the entry source given directly; fileName provides the grammar
// name stem and the directory for import/attribute resolution.
RunResult run_source(const std::string& source, const std::string& fileName,
                     const RunOptions& options);

// Parse plus static validation without derivation: imports must resolve and
// parse, and every successor symbol must have a rule in its block, be the
// terminal keyword, or name a known method. Returns a human-readable report.
std::string check_program(const std::string& entryFile, const RunOptions& options);

}  // namespace psml
