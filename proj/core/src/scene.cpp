#include "srir/scene.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

#include "srir/error.hpp"

namespace srir {
namespace {

void check_unit_interval(const Bands& b, const char* what) {
  for (double v : b) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::kDomain, std::string(what) + " coefficient " + std::to_string(v) + " outside [0,1]");
    }
  }
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

SceneGraph::SceneGraph(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)) {
  faces_.reserve(triangles.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Triangle& tri = triangles[t];
    Face f;
    for (std::size_t k = 0; k < 3; ++k) {
      if (tri.ids[k] >= vertices_.size()) {
        fail(ErrorCode::kReference, "face " + std::to_string(t) + " references vertex " +
                                        std::to_string(tri.ids[k]) + " of " + std::to_string(vertices_.size()));
      }
      f.vertex_ids[k] = tri.ids[k];
      f.vertices[k] = vertices_[tri.ids[k]];
    }
    const Vec3 n = cross(f.vertices[1] - f.vertices[0], f.vertices[2] - f.vertices[0]);
    const double len = norm(n);
    if (!(len > 0.0) || !std::isfinite(len)) {
      fail(ErrorCode::kUnsupportedGeometry, "face " + std::to_string(t) + " is degenerate (zero area)");
    }
    f.normal = n * (1.0 / len);
    f.area = 0.5 * len;
    f.centroid = (f.vertices[0] + f.vertices[1] + f.vertices[2]) * (1.0 / 3.0);
    check_unit_interval(tri.material.reflectivity, "reflectivity");
    check_unit_interval(tri.material.scattering, "scattering");
    f.reflectivity = tri.material.reflectivity;
    f.scattering = tri.material.scattering;
    f.material_name = tri.material_name;
    faces_.push_back(std::move(f));
  }

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> edges;
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const auto& id = faces_[i].vertex_ids;
    edges[edge_key(id[0], id[1])].push_back(i);
    edges[edge_key(id[1], id[2])].push_back(i);
    edges[edge_key(id[2], id[0])].push_back(i);
  }
  neighbors_.assign(faces_.size(), {});
  for (const auto& [key, owners] : edges) {
    for (std::size_t a : owners) {
      for (std::size_t b : owners) {
        if (a != b) neighbors_[a].push_back(b);
      }
    }
  }
  for (auto& n : neighbors_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }

  if (!faces_.empty()) {
    bbox_.min = bbox_.max = faces_.front().vertices[0];
    for (const Face& f : faces_) {
      for (const Vec3& v : f.vertices) {
        for (std::size_t k = 0; k < 3; ++k) {
          bbox_.min[k] = std::min(bbox_.min[k], v[k]);
          bbox_.max[k] = std::max(bbox_.max[k], v[k]);
        }
      }
    }
  }
}

Eigen::MatrixXd SceneGraph::adjacency() const {
  const auto n = static_cast<Eigen::Index>(faces_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    for (std::size_t j : neighbors_[i]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return a;
}

std::vector<Triangle> SceneGraph::triangles() const {
  std::vector<Triangle> out;
  out.reserve(faces_.size());
  for (const Face& f : faces_) {
    out.push_back({f.vertex_ids, {f.reflectivity, f.scattering}, f.material_name});
  }
  return out;
}

SceneGraph SceneGraph::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != faces_.size()) fail(ErrorCode::kShape, "permutation size mismatch");
  const auto tris = triangles();
  std::vector<Triangle> out;
  out.reserve(tris.size());
  for (std::size_t k : perm) {
    if (k >= tris.size()) fail(ErrorCode::kRange, "permutation index out of range");
    out.push_back(tris[k]);
  }
  return {vertices_, std::move(out)};
}

SceneGraph SceneGraph::with_materials(std::span<const Material> materials) const {
  if (materials.size() != faces_.size()) fail(ErrorCode::kShape, "material count mismatch");
  auto tris = triangles();
  for (std::size_t i = 0; i < tris.size(); ++i) tris[i].material = materials[i];
  return {vertices_, std::move(tris)};
}

SceneGraph SceneGraph::translated(const Vec3& offset) const {
  auto verts = vertices_;
  for (auto& v : verts) v += offset;
  return {std::move(verts), triangles()};
}

void validate_pair(const SceneGraph& scene, const PositionPair& pair) {
  if (pair.source == pair.listener) fail(ErrorCode::kDomain, "source and listener coincide");
  if (scene.empty()) return;
  const auto& box = scene.bounding_box();
  if (!box.contains_strictly(pair.source)) fail(ErrorCode::kDomain, "source outside scene bounding box");
  if (!box.contains_strictly(pair.listener)) fail(ErrorCode::kDomain, "listener outside scene bounding box");
}

namespace {

// Appends two triangles covering quad (a, b, c, d), wound so the normal
// points along `facing`.
void add_quad(std::vector<Triangle>& tris, const std::vector<Vec3>& verts, std::array<std::size_t, 4> q,
              const Vec3& facing, const Material& m, const std::string& name) {
  const Vec3 n = cross(verts[q[1]] - verts[q[0]], verts[q[2]] - verts[q[0]]);
  if (dot(n, facing) < 0.0) std::swap(q[1], q[3]);
  tris.push_back({{q[0], q[1], q[2]}, m, name});
  tris.push_back({{q[0], q[2], q[3]}, m, name});
}

// Appends an axis-aligned box [lo, hi]. Normals point outward when
// `inward` is false.
void add_box(std::vector<Vec3>& verts, std::vector<Triangle>& tris, const Vec3& lo, const Vec3& hi, bool inward,
             const Material& m, const std::string& name) {
  const std::size_t base = verts.size();
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        verts.push_back({i ? hi.x : lo.x, j ? hi.y : lo.y, k ? hi.z : lo.z});
      }
    }
  }
  auto id = [base](int i, int j, int k) { return base + static_cast<std::size_t>(i + 2 * j + 4 * k); };
  const double s = inward ? 1.0 : -1.0;
  add_quad(tris, verts, {id(0, 0, 0), id(0, 1, 0), id(0, 1, 1), id(0, 0, 1)}, {s, 0, 0}, m, name);
  add_quad(tris, verts, {id(1, 0, 0), id(1, 1, 0), id(1, 1, 1), id(1, 0, 1)}, {-s, 0, 0}, m, name);
  add_quad(tris, verts, {id(0, 0, 0), id(1, 0, 0), id(1, 0, 1), id(0, 0, 1)}, {0, s, 0}, m, name);
  add_quad(tris, verts, {id(0, 1, 0), id(1, 1, 0), id(1, 1, 1), id(0, 1, 1)}, {0, -s, 0}, m, name);
  add_quad(tris, verts, {id(0, 0, 0), id(1, 0, 0), id(1, 1, 0), id(0, 1, 0)}, {0, 0, s}, m, name);
  add_quad(tris, verts, {id(0, 0, 1), id(1, 0, 1), id(1, 1, 1), id(0, 1, 1)}, {0, 0, -s}, m, name);
}

}  // namespace

SceneGraph make_shoebox(const Vec3& dims, const Bands& reflectivity, const Bands& scattering) {
  if (!(dims.x > 0.0 && dims.y > 0.0 && dims.z > 0.0)) {
    fail(ErrorCode::kDomain, "shoebox dimensions must be positive");
  }
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  add_box(verts, tris, {0, 0, 0}, dims, /*inward=*/true, {reflectivity, scattering}, "wall");
  return {std::move(verts), std::move(tris)};
}

SceneGraph make_furnished_room(const Vec3& dims, std::size_t n_obstacles, std::uint64_t seed,
                               const Bands& reflectivity, const Bands& scattering) {
  if (!(dims.x > 2.0 && dims.y > 2.0 && dims.z > 1.0)) {
    fail(ErrorCode::kDomain, "furnished room needs dims of at least 2 x 2 x 1 m");
  }
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  const Material m{reflectivity, scattering};
  add_box(verts, tris, {0, 0, 0}, dims, /*inward=*/true, m, "wall");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n_obstacles; ++i) {
    const double w = 0.2 + 0.6 * unit(rng);
    const double d = 0.2 + 0.6 * unit(rng);
    const double h = 0.3 + 0.5 * dims.z * unit(rng);
    const double x = 0.1 + (dims.x - w - 0.2) * unit(rng);
    const double y = 0.1 + (dims.y - d - 0.2) * unit(rng);
    add_box(verts, tris, {x, y, 0.0}, {x + w, y + d, h}, /*inward=*/false, m, "furniture");
  }
  return {std::move(verts), std::move(tris)};
}

std::optional<ShoeboxInfo> detect_shoebox(const SceneGraph& scene) {
  if (scene.size() != 12) return std::nullopt;
  ShoeboxInfo info;
  info.box = scene.bounding_box();
  const Vec3 ext = info.box.extent();
  if (!(ext.x > 0 && ext.y > 0 && ext.z > 0)) return std::nullopt;
  std::array<int, 6> count{};
  std::array<double, 6> area{};
  for (const Face& f : scene.faces()) {
    int wall = -1;
    for (std::size_t axis = 0; axis < 3 && wall < 0; ++axis) {
      if (std::abs(std::abs(f.normal[axis]) - 1.0) > 1e-12) continue;
      const double lo = info.box.min[axis];
      const double hi = info.box.max[axis];
      const double tol = 1e-9 * std::max(1.0, std::abs(hi - lo));
      bool on_lo = true;
      bool on_hi = true;
      for (const Vec3& v : f.vertices) {
        on_lo = on_lo && std::abs(v[axis] - lo) <= tol;
        on_hi = on_hi && std::abs(v[axis] - hi) <= tol;
      }
      if (on_lo) wall = static_cast<int>(2 * axis);
      if (on_hi) wall = static_cast<int>(2 * axis + 1);
    }
    if (wall < 0) return std::nullopt;
    if (count[wall] == 0) {
      info.walls[wall] = {f.reflectivity, f.scattering};
    } else if (info.walls[wall].reflectivity != f.reflectivity) {
      return std::nullopt;
    }
    ++count[wall];
    area[wall] += f.area;
  }
  for (std::size_t w = 0; w < 6; ++w) {
    const std::size_t axis = w / 2;
    const double expect = ext.x * ext.y * ext.z / ext[axis];
    if (count[w] != 2 || std::abs(area[w] - expect) > 1e-9 * expect) return std::nullopt;
  }
  return info;
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency, bool add_self_loops) {
  if (adjacency.rows() == 0) fail(ErrorCode::kDomain, "graph is empty");
  if (adjacency.rows() != adjacency.cols()) fail(ErrorCode::kShape, "adjacency must be square");
  Eigen::MatrixXd a = adjacency;
  if (add_self_loops) a += Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::VectorXd inv_sqrt(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double deg = a.row(i).sum();
    if (!(deg > 0.0)) fail(ErrorCode::kDegreeZero, "vertex " + std::to_string(i) + " has degree zero");
    inv_sqrt(i) = 1.0 / std::sqrt(deg);
  }
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd normalize_adjacency(const SceneGraph& graph, bool add_self_loops) {
  return normalize_adjacency(graph.adjacency(), add_self_loops);
}

}  // namespace srir
