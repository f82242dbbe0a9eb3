#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "srir/types.hpp"

namespace srir {

struct Material {
  Bands reflectivity{};
  Bands scattering{};
};

using MaterialLibrary = std::map<std::string, Material>;

/// One mesh triangle, by vertex index into a shared vertex pool.
struct Triangle {
  std::array<std::size_t, 3> ids{};
  Material material{};
  std::string material_name;
};

/// A reflecting triangle. Geometry is derived from the vertex pool at
/// construction; acoustic properties are amplitude coefficients per band.
struct Face {
  std::array<Vec3, 3> vertices{};
  std::array<std::size_t, 3> vertex_ids{};
  Vec3 centroid{};
  Vec3 normal{};  // (v1 - v0) x (v2 - v0), normalized
  double area = 0.0;
  Bands reflectivity{};
  Bands scattering{};
  std::string material_name;
};

struct Aabb {
  Vec3 min{};
  Vec3 max{};

  bool contains_strictly(const Vec3& p) const {
    return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y && p.z > min.z && p.z < max.z;
  }
  Vec3 extent() const { return max - min; }
};

struct PositionPair {
  Vec3 source{};
  Vec3 listener{};
};

/// Triangle-face graph of a scene. Immutable once built; safe to share
/// between concurrent readers.
class SceneGraph {
 public:
  SceneGraph() = default;
  SceneGraph(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(std::size_t i) const { return faces_[i]; }
  std::size_t size() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const Aabb& bounding_box() const { return bbox_; }

  /// Shared-edge neighbours of face `i`, ascending.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

  /// Dense symmetric 0/1 adjacency, zero diagonal.
  Eigen::MatrixXd adjacency() const;

  /// Scene with faces reordered so that new face k is old face perm[k].
  SceneGraph permuted(std::span<const std::size_t> perm) const;

  /// Same geometry with per-face materials replaced.
  SceneGraph with_materials(std::span<const Material> materials) const;

  /// Same scene translated by `offset`.
  SceneGraph translated(const Vec3& offset) const;

  std::vector<Triangle> triangles() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<std::vector<std::size_t>> neighbors_;
  Aabb bbox_{};
};

/// Throws kDomain unless both points lie strictly inside the scene's
/// bounding box and differ.
void validate_pair(const SceneGraph& scene, const PositionPair& pair);

/// Axis-aligned 12-triangle box spanning (0,0,0)..dims with inward normals.
/// Face order: x=0, x=w, y=0, y=d, z=0, z=h walls, two triangles each.
SceneGraph make_shoebox(const Vec3& dims, const Bands& reflectivity, const Bands& scattering);

/// Shoebox with `n_obstacles` random axis-aligned boxes resting on the
/// floor (12 outward-facing triangles each). Used for larger-mesh timing.
SceneGraph make_furnished_room(const Vec3& dims, std::size_t n_obstacles, std::uint64_t seed,
                               const Bands& reflectivity, const Bands& scattering);

/// If `scene` is an axis-aligned 12-triangle box, returns its dims and the
/// per-wall materials (order x0, xL, y0, yL, z0, zL).
struct ShoeboxInfo {
  Aabb box{};
  std::array<Material, 6> walls{};
};
std::optional<ShoeboxInfo> detect_shoebox(const SceneGraph& scene);

/// D^-1/2 A D^-1/2 with D_ii = sum_j A_ij; A gets the identity added when
/// `add_self_loops` is set. Throws kDegreeZero naming the isolated vertex.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency, bool add_self_loops);
Eigen::MatrixXd normalize_adjacency(const SceneGraph& graph, bool add_self_loops);

// --- file formats -------------------------------------------------------

/// Materials sidecar: {"name": {"reflectivity": x | [8], "scattering": x | [8]}, ...}.
/// A top-level "materials" object wrapping the map is also accepted.
MaterialLibrary parse_materials(const nlohmann::json& doc);
MaterialLibrary load_materials(const std::filesystem::path& path);

/// OBJ subset: `v x y z`, `f a b c` (1-based, `a/b/c` forms accepted),
/// `usemtl name`; faces before any `usemtl` use material "default".
SceneGraph parse_obj(std::istream& in, const MaterialLibrary& materials);
SceneGraph load_scene(const std::filesystem::path& mesh_path, const std::filesystem::path& materials_path);

/// Writes the mesh as OBJ with one `usemtl` per distinct material and
/// returns the matching materials library.
MaterialLibrary write_obj(const SceneGraph& scene, std::ostream& out);
nlohmann::json materials_to_json(const MaterialLibrary& materials);

nlohmann::json scene_to_json(const SceneGraph& scene);
/// Accepts the full document written by scene_to_json or a
/// {"shoebox": {"dims": [w,d,h], "reflectivity": .., "scattering": ..}} shorthand.
SceneGraph scene_from_json(const nlohmann::json& doc);
void save_scene_json(const SceneGraph& scene, const std::filesystem::path& path);
SceneGraph load_scene_json(const std::filesystem::path& path);

/// Scalar or 8-element array into a band vector; scalar broadcasts.
Bands bands_from_json(const nlohmann::json& value, const std::string& context);

}  // namespace srir
