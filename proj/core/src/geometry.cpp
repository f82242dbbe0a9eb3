#include "srir/geometry.hpp"

#include <algorithm>

namespace srir {

PlaneGroups PlaneGroups::build(const SceneGraph& scene) {
  PlaneGroups g;
  g.plane_of.assign(scene.size(), 0);
  const Aabb& box = scene.bounding_box();
  const double scale = std::max(1.0, norm(box.extent()));
  const double tol = 1e-9 * scale;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Face& f = scene.face(i);
    bool placed = false;
    for (std::size_t p = 0; p < g.planes.size() && !placed; ++p) {
      const Plane& pl = g.planes[p];
      if (std::abs(std::abs(dot(pl.normal, f.normal)) - 1.0) > 1e-12) continue;
      bool coplanar = true;
      for (const Vec3& v : f.vertices) coplanar = coplanar && std::abs(pl.signed_distance(v)) <= tol;
      if (coplanar) {
        g.faces[p].push_back(i);
        g.plane_of[i] = p;
        placed = true;
      }
    }
    if (!placed) {
      g.plane_of[i] = g.planes.size();
      g.planes.push_back({f.normal, f.vertices[0]});
      g.faces.push_back({i});
    }
  }
  return g;
}

bool point_in_triangle(const Face& face, const Vec3& p, double tol) {
  const Vec3 e0 = face.vertices[1] - face.vertices[0];
  const Vec3 e1 = face.vertices[2] - face.vertices[0];
  const Vec3 w = p - face.vertices[0];
  const double d00 = dot(e0, e0);
  const double d01 = dot(e0, e1);
  const double d11 = dot(e1, e1);
  const double d20 = dot(w, e0);
  const double d21 = dot(w, e1);
  const double den = d00 * d11 - d01 * d01;
  const double v = (d11 * d20 - d01 * d21) / den;
  const double u = (d00 * d21 - d01 * d20) / den;
  return v >= -tol && u >= -tol && (u + v) <= 1.0 + tol;
}

std::optional<double> intersect_segment(const Face& face, const Vec3& a, const Vec3& b) {
  // Moller-Trumbore on the segment direction b - a.
  const Vec3 dir = b - a;
  const Vec3 e1 = face.vertices[1] - face.vertices[0];
  const Vec3 e2 = face.vertices[2] - face.vertices[0];
  const Vec3 pvec = cross(dir, e2);
  const double det = dot(e1, pvec);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = a - face.vertices[0];
  const double u = dot(tvec, pvec) * inv;
  constexpr double kEdge = 1e-12;
  if (u < -kEdge || u > 1.0 + kEdge) return std::nullopt;
  const Vec3 qvec = cross(tvec, e1);
  const double v = dot(dir, qvec) * inv;
  if (v < -kEdge || u + v > 1.0 + kEdge) return std::nullopt;
  const double t = dot(e2, qvec) * inv;
  if (t < 0.0 || t > 1.0) return std::nullopt;
  return t;
}

namespace {

Aabb face_box(const Face& f) {
  Aabb b{f.vertices[0], f.vertices[0]};
  for (const Vec3& v : f.vertices) {
    for (std::size_t k = 0; k < 3; ++k) {
      b.min[k] = std::min(b.min[k], v[k]);
      b.max[k] = std::max(b.max[k], v[k]);
    }
  }
  return b;
}

void grow(Aabb& b, const Aabb& o) {
  for (std::size_t k = 0; k < 3; ++k) {
    b.min[k] = std::min(b.min[k], o.min[k]);
    b.max[k] = std::max(b.max[k], o.max[k]);
  }
}

bool segment_hits_box(const Aabb& box, const Vec3& a, const Vec3& dir) {
  double t0 = 0.0;
  double t1 = 1.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double pad = 1e-9 * (1.0 + std::abs(box.max[k]) + std::abs(box.min[k]));
    const double lo = box.min[k] - pad;
    const double hi = box.max[k] + pad;
    if (dir[k] == 0.0) {
      if (a[k] < lo || a[k] > hi) return false;
      continue;
    }
    double ta = (lo - a[k]) / dir[k];
    double tb = (hi - a[k]) / dir[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

Bvh::Bvh(const SceneGraph& scene) : scene_(&scene) {
  const auto n = static_cast<std::uint32_t>(scene.size());
  order_.resize(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    order_[i] = i;
    centroids[i] = scene.face(i).centroid;
  }
  if (n > 0) {
    nodes_.reserve(2 * n);
    build(0, n, centroids);
  }
}

std::uint32_t Bvh::build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Aabb box = face_box(scene_->face(order_[first]));
  Aabb cbox{centroids[order_[first]], centroids[order_[first]]};
  for (std::uint32_t i = first; i < first + count; ++i) {
    grow(box, face_box(scene_->face(order_[i])));
    grow(cbox, {centroids[order_[i]], centroids[order_[i]]});
  }
  nodes_[index].box = box;
  constexpr std::uint32_t kLeafSize = 4;
  if (count <= kLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  const Vec3 ext = cbox.extent();
  std::size_t axis = 0;
  if (ext.y > ext[axis]) axis = 1;
  if (ext.z > ext[axis]) axis = 2;
  const std::uint32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::uint32_t l, std::uint32_t r) { return centroids[l][axis] < centroids[r][axis]; });
  const std::uint32_t left = build(first, mid - first, centroids);
  const std::uint32_t right = build(mid, first + count - mid, centroids);
  nodes_[index].first = left;
  nodes_[index].right = right;
  return index;
}

bool Bvh::occluded(const Vec3& a, const Vec3& b, const PlaneGroups& groups,
                   std::span<const std::size_t> skip_planes) const {
  if (nodes_.empty()) return false;
  const Vec3 dir = b - a;
  constexpr double kMargin = 1e-9;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!segment_hits_box(node.box, a, dir)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::size_t f = order_[i];
        const std::size_t plane = groups.plane_of[f];
        if (std::find(skip_planes.begin(), skip_planes.end(), plane) != skip_planes.end()) continue;
        const auto t = intersect_segment(scene_->face(f), a, b);
        if (t && *t > kMargin && *t < 1.0 - kMargin) return true;
      }
    } else {
      stack[top++] = node.first;
      stack[top++] = node.right;
    }
  }
  return false;
}

}  // namespace srir
