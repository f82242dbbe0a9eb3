#pragma once

#include <optional>
#include <span>
#include <vector>

#include "srir/scene.hpp"

namespace srir {

/// Reflecting plane through `origin` with unit `normal`.
struct Plane {
  Vec3 normal{};
  Vec3 origin{};

  double signed_distance(const Vec3& p) const { return dot(normal, p - origin); }
  Vec3 mirror(const Vec3& p) const { return p - normal * (2.0 * signed_distance(p)); }
};

/// Faces partitioned into coplanar groups. Each group shares one canonical
/// plane (taken from its lowest-index face), so mirroring across any face of
/// a group gives bit-identical images.
struct PlaneGroups {
  std::vector<Plane> planes;
  std::vector<std::vector<std::size_t>> faces;  // per plane, ascending face indices
  std::vector<std::size_t> plane_of;            // per face

  static PlaneGroups build(const SceneGraph& scene);
};

/// Point-in-triangle test for a point already on the triangle's plane.
/// Barycentric coordinates may undershoot zero by `tol` (edges count as inside).
bool point_in_triangle(const Face& face, const Vec3& p, double tol = 1e-9);

/// Parameter t in [0,1] where segment a->b crosses the triangle, if any.
std::optional<double> intersect_segment(const Face& face, const Vec3& a, const Vec3& b);

/// Bounding-volume hierarchy over scene faces for segment occlusion queries.
class Bvh {
 public:
  explicit Bvh(const SceneGraph& scene);

  /// True when some face whose plane is not in `skip_planes` crosses the
  /// open segment a->b (endpoints excluded by a relative margin).
  bool occluded(const Vec3& a, const Vec3& b, const PlaneGroups& groups,
                std::span<const std::size_t> skip_planes) const;

 private:
  struct Node {
    Aabb box{};
    std::uint32_t first = 0;  // leaf: index into order_; inner: left child
    std::uint32_t count = 0;  // > 0 for leaves
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids);

  const SceneGraph* scene_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace srir
