#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "psml/obj_export.hpp"
#include "psml/query.hpp"
#include "psml/trimesh.hpp"

namespace psml {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

struct MaterialTable {
  // serialize() -> assigned name; insertion order preserved for the MTL file.
  std::map<std::string, std::string> names;
  std::vector<std::pair<std::string, AppearanceRecord>> ordered;

  const std::string& name_for(const AppearanceRecord& rec) {
    std::string key = rec.serialize();
    auto it = names.find(key);
    if (it != names.end()) return it->second;
    std::string name = rec.empty() ? "default" : "m_" + hex64(rec.hash());
    // Guard against hash collisions between distinct records.
    for (const auto& [n, r] : ordered) {
      if (n == name && r.serialize() != key) {
        name += "_" + std::to_string(ordered.size());
        break;
      }
    }
    ordered.emplace_back(name, rec);
    return names.emplace(std::move(key), std::move(name)).first->second;
  }
};

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.good()) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
}

class ObjWriter {
 public:
  ObjWriter(MaterialTable& mats, const std::string& mtlFile) : mats_(mats) {
    out_ << "# procedural shape model export\n# up axis: y\n";
    out_ << "mtllib " << mtlFile << "\n";
  }

  void add_terminal(const SGNode& node, int segments) {
    TriMesh mesh;
    if (node.shape.hasMesh()) mesh = *node.shape.meshPayload;
    else mesh = triangulate(node.shape, segments);
    if (mesh.tris.empty()) return;

    // Face sections: payloads with provenance groups keep one section per
    // contributing group, everything else is one section per terminal.
    struct Section {
      std::string group;
      std::string material;
      std::vector<int> faces;
    };
    std::vector<Section> sections;
    if (node.shape.hasMesh() && node.shape.meshGroups &&
        !node.shape.meshGroups->empty() && !mesh.mats.empty()) {
      std::map<int, size_t> byId;
      for (size_t f = 0; f < mesh.tris.size(); ++f) {
        int id = mesh.material(f);
        auto it = byId.find(id);
        if (it == byId.end()) {
          Section sec;
          const auto& groups = *node.shape.meshGroups;
          if (id >= 0 && id < static_cast<int>(groups.size())) {
            sec.group = groups[id].label;
            sec.material = mats_.name_for(groups[id].appearance);
          } else {
            sec.group = node.path();
            sec.material = mats_.name_for(node.shape.appearance);
          }
          it = byId.emplace(id, sections.size()).first;
          sections.push_back(std::move(sec));
        }
        sections[it->second].faces.push_back(static_cast<int>(f));
      }
    } else {
      Section sec;
      sec.group = node.path();
      sec.material = mats_.name_for(node.shape.appearance);
      for (size_t f = 0; f < mesh.tris.size(); ++f)
        sec.faces.push_back(static_cast<int>(f));
      sections.push_back(std::move(sec));
    }

    // Per-terminal vertex dedup on exact coordinates.
    std::map<std::array<double, 3>, int> index;
    std::vector<int> remap(mesh.verts.size());
    for (size_t v = 0; v < mesh.verts.size(); ++v) {
      std::array<double, 3> key{mesh.verts[v].x(), mesh.verts[v].y(),
                                mesh.verts[v].z()};
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, nextVertex_++).first;
        out_ << "v " << fmt(key[0]) << " " << fmt(key[1]) << " " << fmt(key[2])
             << "\n";
        ++vertexCount_;
      }
      remap[v] = it->second;
    }

    for (const auto& sec : sections) {
      if (sec.faces.empty()) continue;
      out_ << "g " << sec.group << "\n";
      out_ << "usemtl " << sec.material << "\n";
      for (int f : sec.faces) {
        const auto& t = mesh.tris[static_cast<size_t>(f)];
        out_ << "f " << remap[static_cast<size_t>(t[0])] << " "
             << remap[static_cast<size_t>(t[1])] << " "
             << remap[static_cast<size_t>(t[2])] << "\n";
        ++faceCount_;
      }
    }
  }

  std::string str() const { return out_.str(); }
  int vertexCount() const { return vertexCount_; }
  int faceCount() const { return faceCount_; }

 private:
  MaterialTable& mats_;
  std::ostringstream out_;
  int nextVertex_ = 1;  // OBJ indices are 1-based
  int vertexCount_ = 0;
  int faceCount_ = 0;
};

std::string mtl_text(const MaterialTable& mats) {
  std::ostringstream out;
  out << "# procedural shape model materials\n";
  for (const auto& [name, rec] : mats.ordered) {
    out << "newmtl " << name << "\n";
    auto triple = [&](const char* mtlKey, const AppearanceValue* v) {
      if (!v || v->isString || v->nums.empty()) return;
      double r = v->nums[0];
      double g = v->nums.size() > 1 ? v->nums[1] : r;
      double b = v->nums.size() > 2 ? v->nums[2] : r;
      out << mtlKey << " " << fmt(r) << " " << fmt(g) << " " << fmt(b) << "\n";
    };
    const AppearanceValue* diffuse = rec.find("diffuse");
    if (!diffuse) diffuse = rec.find("color");
    if (rec.empty()) out << "Kd 0.8 0.8 0.8\n";
    triple("Kd", diffuse);
    triple("Ka", rec.find("ambient"));
    triple("Ks", rec.find("specular"));
    triple("Ke", rec.find("emissive"));
    if (const auto* v = rec.find("shininess"); v && !v->isString && !v->nums.empty())
      out << "Ns " << fmt(v->nums[0]) << "\n";
    if (const auto* v = rec.find("transparency"); v && !v->isString && !v->nums.empty())
      out << "d " << fmt(1.0 - v->nums[0]) << "\n";
    if (const auto* v = rec.find("texture"); v && v->isString)
      out << "map_Kd " << v->str << "\n";
    const AppearanceValue* bump = rec.find("bumpmap");
    if (!bump) bump = rec.find("bump");
    if (bump && bump->isString) {
      out << "map_bump ";
      if (const auto* w = rec.find("bumpweight"); w && !w->isString && !w->nums.empty())
        out << "-bm " << fmt(w->nums[0]) << " ";
      out << bump->str << "\n";
    }
    if (const auto* v = rec.find("material"); v && v->isString)
      out << "# material: " << v->str << "\n";
  }
  return out.str();
}

}  // namespace

ExportSummary write_obj(const SGNode& root, const std::string& stem,
                        const ExportOptions& options) {
  std::vector<const SGNode*> visible;
  std::vector<const SGNode*> voids;
  walk_tree(root, [&](const SGNode& n) {
    if (!n.terminal) return;
    if (n.shape.isVoid) voids.push_back(&n);
    else visible.push_back(&n);
  });

  fs::path mtlPath = fs::path(stem + ".mtl");
  MaterialTable mats;
  ObjWriter obj(mats, mtlPath.filename().string());
  for (const SGNode* n : visible) obj.add_terminal(*n, options.segments);

  ExportSummary summary;
  summary.visibleTerminals = static_cast<int>(visible.size());
  summary.voidTerminals = static_cast<int>(voids.size());
  summary.vertexCount = obj.vertexCount();
  summary.faceCount = obj.faceCount();

  std::string voidsText;
  if (options.includeVoids && !voids.empty()) {
    ObjWriter vw(mats, mtlPath.filename().string());
    for (const SGNode* n : voids) vw.add_terminal(*n, options.segments);
    voidsText = vw.str();
  }

  write_atomic(stem + ".obj", obj.str());
  write_atomic(mtlPath.string(), mtl_text(mats));
  if (!voidsText.empty()) {
    write_atomic(stem + ".voids.obj", voidsText);
    summary.voidsFileWritten = true;
  }
  return summary;
}

void write_stats(SGNode& root, const std::string& stem,
                 const std::vector<std::string>& patterns) {
  std::vector<StatsRow> rows = collect_stats(root, patterns);

  std::ostringstream csv;
  csv << "pattern,count,volume\n";
  for (const auto& row : rows)
    csv << row.pattern << "," << row.count << "," << fmt(row.volume) << "\n";

  size_t nameWidth = 7;  // "pattern"
  for (const auto& row : rows) nameWidth = std::max(nameWidth, row.pattern.size());
  std::ostringstream txt;
  auto line = [&](const std::string& name, const std::string& count,
                  const std::string& volume) {
    txt << std::left << std::setw(static_cast<int>(nameWidth)) << name
        << std::right << std::setw(8) << count << "  " << volume << "\n";
  };
  line("pattern", "count", "volume");
  int totalCount = 0;
  double totalVolume = 0.0;
  for (const auto& row : rows) {
    line(row.pattern, std::to_string(row.count), fmt(row.volume));
    totalCount += row.count;
    totalVolume += row.volume;
  }
  line("total", std::to_string(totalCount), fmt(totalVolume));

  write_atomic(stem + ".stats.csv", csv.str());
  write_atomic(stem + ".stats.txt", txt.str());
}

}  // namespace psml
