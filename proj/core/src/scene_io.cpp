#include <charconv>
#include <fstream>
#include <sstream>

#include "srir/error.hpp"
#include "srir/scene.hpp"

namespace srir {
namespace {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

bool parse_double(std::string_view tok, double& out) {
  // from_chars for double is available in libstdc++ 11.
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Vertex index of an OBJ face token ("7", "7/1", "7//3", "7/1/3").
bool parse_face_index(std::string_view tok, std::size_t vertex_count, std::size_t& out) {
  tok = tok.substr(0, tok.find('/'));
  long long idx = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, idx);
  if (ec != std::errc() || ptr != end || idx == 0) return false;
  if (idx < 0) idx += static_cast<long long>(vertex_count) + 1;
  if (idx < 1) return false;
  out = static_cast<std::size_t>(idx - 1);
  return true;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Bands bands_from_json(const json& value, const std::string& context) {
  if (value.is_number()) return uniform_bands(value.get<double>());
  if (value.is_array() && value.size() == kNumBands) {
    Bands b;
    for (std::size_t i = 0; i < kNumBands; ++i) {
      if (!value[i].is_number()) fail(ErrorCode::kConfig, context + ": band values must be numbers");
      b[i] = value[i].get<double>();
    }
    return b;
  }
  fail(ErrorCode::kConfig, context + ": expected a scalar or " + std::to_string(kNumBands) + " band values");
}

MaterialLibrary parse_materials(const json& doc) {
  const json& map = (doc.is_object() && doc.contains("materials") && doc["materials"].is_object())
                        ? doc["materials"]
                        : doc;
  if (!map.is_object()) fail(ErrorCode::kConfig, "materials document must be an object");
  MaterialLibrary lib;
  for (const auto& [name, entry] : map.items()) {
    if (!entry.is_object() || !entry.contains("reflectivity")) {
      fail(ErrorCode::kConfig, "material '" + name + "' needs a reflectivity");
    }
    Material m;
    m.reflectivity = bands_from_json(entry["reflectivity"], "material '" + name + "' reflectivity");
    m.scattering = entry.contains("scattering")
                       ? bands_from_json(entry["scattering"], "material '" + name + "' scattering")
                       : uniform_bands(0.0);
    lib.emplace(name, m);
  }
  return lib;
}

MaterialLibrary load_materials(const std::filesystem::path& path) { return parse_materials(read_json_file(path)); }

SceneGraph parse_obj(std::istream& in, const MaterialLibrary& materials) {
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::string current = "default";
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string_view kind = tok[0];
    if (kind == "v") {
      if (tok.size() < 4) throw ParseError(lineno, "vertex needs 3 coordinates");
      Vec3 v;
      for (std::size_t k = 0; k < 3; ++k) {
        if (!parse_double(tok[k + 1], v[k])) throw ParseError(lineno, "bad coordinate '" + std::string(tok[k + 1]) + "'");
      }
      verts.push_back(v);
    } else if (kind == "f") {
      if (tok.size() < 4) throw ParseError(lineno, "face needs 3 vertex indices");
      if (tok.size() > 4) {
        fail(ErrorCode::kUnsupportedGeometry,
             "line " + std::to_string(lineno) + ": face with " + std::to_string(tok.size() - 1) +
                 " vertices; only triangles are supported");
      }
      Triangle t;
      for (std::size_t k = 0; k < 3; ++k) {
        if (!parse_face_index(tok[k + 1], verts.size(), t.ids[k]) || t.ids[k] >= verts.size()) {
          throw ParseError(lineno, "bad vertex index '" + std::string(tok[k + 1]) + "'");
        }
      }
      auto it = materials.find(current);
      if (it == materials.end()) {
        fail(ErrorCode::kReference, "unknown material '" + current + "' (line " + std::to_string(lineno) + ")");
      }
      t.material = it->second;
      t.material_name = current;
      tris.push_back(std::move(t));
    } else if (kind == "usemtl") {
      if (tok.size() < 2) throw ParseError(lineno, "usemtl needs a name");
      current = std::string(tok[1]);
    } else if (kind == "vn" || kind == "vt" || kind == "o" || kind == "g" || kind == "s" || kind == "mtllib") {
      continue;
    } else {
      throw ParseError(lineno, "unknown record '" + std::string(kind) + "'");
    }
  }
  return {std::move(verts), std::move(tris)};
}

SceneGraph load_scene(const std::filesystem::path& mesh_path, const std::filesystem::path& materials_path) {
  const auto materials = load_materials(materials_path);
  std::ifstream in(mesh_path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + mesh_path.string());
  return parse_obj(in, materials);
}

MaterialLibrary write_obj(const SceneGraph& scene, std::ostream& out) {
  MaterialLibrary lib;
  std::vector<std::string> names(scene.size());
  // Faces sharing a name must share coefficients; otherwise a per-face name is minted.
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Face& f = scene.face(i);
    std::string name = f.material_name.empty() ? "m" : f.material_name;
    auto it = lib.find(name);
    if (it != lib.end() && (it->second.reflectivity != f.reflectivity || it->second.scattering != f.scattering)) {
      name += "_f" + std::to_string(i);
    }
    lib.emplace(name, Material{f.reflectivity, f.scattering});
    names[i] = name;
  }
  out.precision(17);
  for (const Vec3& v : scene.vertices()) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  std::string current;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (names[i] != current) {
      current = names[i];
      out << "usemtl " << current << '\n';
    }
    const auto& id = scene.face(i).vertex_ids;
    out << "f " << id[0] + 1 << ' ' << id[1] + 1 << ' ' << id[2] + 1 << '\n';
  }
  return lib;
}

json materials_to_json(const MaterialLibrary& materials) {
  json doc = json::object();
  for (const auto& [name, m] : materials) {
    doc[name] = {{"reflectivity", m.reflectivity}, {"scattering", m.scattering}};
  }
  return doc;
}

json scene_to_json(const SceneGraph& scene) {
  json verts = json::array();
  for (const Vec3& v : scene.vertices()) verts.push_back({v.x, v.y, v.z});
  json faces = json::array();
  for (const Face& f : scene.faces()) {
    faces.push_back({{"v", f.vertex_ids},
                     {"material", f.material_name},
                     {"reflectivity", f.reflectivity},
                     {"scattering", f.scattering}});
  }
  return {{"format", "srirkit-scene"}, {"version", 1}, {"vertices", verts}, {"faces", faces}};
}

SceneGraph scene_from_json(const json& doc) {
  try {
    if (doc.contains("shoebox")) {
      const json& box = doc["shoebox"];
      const auto dims = box.at("dims").get<std::vector<double>>();
      if (dims.size() != 3) fail(ErrorCode::kConfig, "shoebox dims needs 3 values");
      const Bands refl = bands_from_json(box.at("reflectivity"), "shoebox reflectivity");
      const Bands scat = box.contains("scattering") ? bands_from_json(box["scattering"], "shoebox scattering")
                                                    : uniform_bands(0.0);
      return make_shoebox({dims[0], dims[1], dims[2]}, refl, scat);
    }
    std::vector<Vec3> verts;
    for (const auto& v : doc.at("vertices")) {
      verts.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
    }
    std::vector<Triangle> tris;
    for (const auto& f : doc.at("faces")) {
      Triangle t;
      const auto ids = f.at("v").get<std::vector<std::size_t>>();
      if (ids.size() != 3) fail(ErrorCode::kUnsupportedGeometry, "scene faces must be triangles");
      t.ids = {ids[0], ids[1], ids[2]};
      t.material.reflectivity = bands_from_json(f.at("reflectivity"), "face reflectivity");
      t.material.scattering =
          f.contains("scattering") ? bands_from_json(f["scattering"], "face scattering") : uniform_bands(0.0);
      t.material_name = f.value("material", std::string());
      tris.push_back(std::move(t));
    }
    return {std::move(verts), std::move(tris)};
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("malformed scene document: ") + e.what());
  }
}

void save_scene_json(const SceneGraph& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << scene_to_json(scene).dump(1) << '\n';
}

SceneGraph load_scene_json(const std::filesystem::path& path) { return scene_from_json(read_json_file(path)); }

}  // namespace srir
