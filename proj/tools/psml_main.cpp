#include <charconv>
#include <chrono>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "psml/interpreter.hpp"
#include "psml/obj_export.hpp"
#include "psml/parser.hpp"

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string default_stem(const std::string& file) {
  size_t dot = file.find_last_of('.');
  size_t slash = file.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return file.substr(0, dot);
  return file;
}

std::map<std::string, std::string> parse_remaps(
    const std::vector<std::string>& pairs) {
  std::map<std::string, std::string> out;
  for (const auto& p : pairs) {
    size_t eq = p.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
      throw CLI::ValidationError("--attr-group", "expected OLD=NEW, got '" + p + "'");
    out[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procedural shape modeling language tool"};
  app.require_subcommand(1);

  std::string file;
  std::string outStem;
  std::uint64_t seed = 0;
  int segments = 32;
  bool includeVoids = false;
  std::vector<std::string> statsPatterns;
  std::vector<std::string> attrDirs;
  std::vector<std::string> importDirs;
  std::vector<std::string> groupRemaps;

  CLI::App* run = app.add_subcommand("run", "derive a grammar, export OBJ/MTL and stats");
  run->add_option("file", file, "grammar source file (.psm)")->required();
  run->add_option("-o,--output", outStem, "output stem (default: source path minus extension)");
  run->add_option("--seed", seed, "seed for Math.random (default 0)");
  run->add_option("--segments", segments, "segments per full turn for curved surfaces (default 32)");
  run->add_flag("--include-voids", includeVoids, "also write <stem>.voids.obj");
  run->add_option("--stats", statsPatterns, "stats rows by path pattern (default: leaf symbols)");
  run->add_option("--attr-dir", attrDirs, "extra directories for attribute files");
  run->add_option("--import-dir", importDirs, "extra directories for imported grammars");
  run->add_option("--attr-group", groupRemaps, "remap useAttributes groups, OLD=NEW");

  CLI::App* check = app.add_subcommand("check", "parse and statically validate a grammar");
  check->add_option("file", file, "grammar source file (.psm)")->required();
  check->add_option("--import-dir", importDirs, "extra directories for imported grammars");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  psml::RunOptions opts;
  opts.seed = seed;
  opts.segments = segments;
  opts.importDirs = importDirs;
  opts.attrDirs = attrDirs;
  try {
    opts.attrGroupOverrides = parse_remaps(groupRemaps);
  } catch (const CLI::ParseError& e) {
    return app.exit(e), 1;
  }

  try {
    if (check->parsed()) {
      std::cout << psml::check_program(file, opts) << "\n";
      return 0;
    }

    auto t0 = std::chrono::steady_clock::now();
    psml::RunResult result = psml::run_program(file, opts);

    std::string stem = outStem.empty() ? default_stem(file) : outStem;
    psml::ExportOptions exportOpts;
    exportOpts.segments = segments;
    exportOpts.includeVoids = includeVoids;
    psml::ExportSummary summary = psml::write_obj(*result.root, stem, exportOpts);
    psml::write_stats(*result.root, stem, statsPatterns);
    auto t1 = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();

    std::cout << "terminals: " << result.terminalCount << "\n"
              << "voids: " << result.voidCount << "\n"
              << "total volume: " << fmt(result.totalVolume) << "\n"
              << "vertices: " << summary.vertexCount
              << ", faces: " << summary.faceCount << "\n"
              << "wall time: " << fmt(secs) << " s\n";
    return 0;
  } catch (const psml::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const psml::GeomError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const psml::RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == "io-error") return 4;
    if (check->parsed()) return 2;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
