#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "srir/ambisonic_ir.hpp"
#include "srir/geometry.hpp"
#include "srir/scene.hpp"

namespace srir {

/// Reflection order of the low-order part computed geometrically.
class LorOrder {
 public:
  static constexpr int kDefault = 2;

  constexpr LorOrder() = default;
  explicit LorOrder(int n);

  constexpr int value() const { return n_; }

 private:
  int n_ = kDefault;
};

/// A virtual source obtained by mirroring the real source across a sequence
/// of reflecting planes.
///
/// Images that coincide (e.g. two perpendicular walls hit in either order,
/// or two coplanar triangles) are merged; `plane_paths` keeps every plane
/// sequence that produces the position. `face_path` / `band_gains` describe
/// the nominal path: the lowest-index face of each plane in the first plane
/// path. The face actually hit for a given listener comes from
/// `check_visibility`.
struct ImageSource {
  Vec3 position{};
  int order = 0;
  std::vector<std::size_t> face_path;
  Bands band_gains = uniform_bands(1.0);
  std::vector<std::vector<std::size_t>> plane_paths;
};

/// A geometrically valid specular path from an image to a listener.
struct ValidatedPath {
  std::vector<Vec3> reflection_points;  // source side first
  std::vector<std::size_t> faces;       // faces hit, source side first
  Bands band_gains = uniform_bands(1.0);
  double length = 0.0;
  Vec3 arrival_direction{};  // unit vector from the listener towards the last reflection (or source)
};

/// One specular arrival at the listener.
struct Arrival {
  int order = 0;
  std::vector<std::size_t> faces;
  double length = 0.0;
  double delay_samples = 0.0;
  double amplitude = 0.0;
  Vec3 direction{};
};

/// Scene-bound image-source machinery. Building it groups coplanar faces and
/// constructs the occlusion BVH; afterwards all queries are const and safe to
/// call concurrently.
class ImageSourceEngine {
 public:
  explicit ImageSourceEngine(const SceneGraph& scene);

  const SceneGraph& scene() const { return *scene_; }
  const PlaneGroups& planes() const { return groups_; }

  std::vector<ImageSource> enumerate(const Vec3& source, int max_order) const;
  std::optional<ValidatedPath> check_visibility(const ImageSource& image, const Vec3& listener) const;

  /// Validated arrivals up to `max_order`, sorted by (order, face path).
  std::vector<Arrival> arrivals(const PositionPair& pair, int max_order, double sample_rate) const;

 private:
  std::optional<ValidatedPath> validate_plane_path(const ImageSource& image, const std::vector<std::size_t>& planes,
                                                   const Vec3& listener) const;

  const SceneGraph* scene_;
  PlaneGroups groups_;
  Bvh bvh_;
};

std::vector<ImageSource> enumerate_image_sources(const SceneGraph& scene, const Vec3& source, int max_order);

std::optional<ValidatedPath> check_visibility(const SceneGraph& scene, const ImageSource& image,
                                              const Vec3& listener);

/// Cardioid gain 0.5 (1 + cos theta) of each tetrahedral capsule for an
/// arrival from `direction` (unit vector).
std::array<double, kAmbiChannels> capsule_gains(const Vec3& direction,
                                                const std::array<Vec3, kAmbiChannels>& capsules);

/// Taps of the 16-point Hann-windowed sinc placed at a fractional delay,
/// normalized to unit sum. `first` receives the sample index of tap 0.
std::array<double, 16> fractional_delay_kernel(double delay_samples, long& first);

/// Adds one arrival into `ir`. Taps falling past either end are dropped.
void encode_contribution(const Vec3& direction, double amplitude, double delay_samples, AmbisonicIR& ir);

/// Renders arrivals into an A-format IR; arrivals beyond `length` are dropped.
AmbisonicIR render_arrivals(const std::vector<Arrival>& arrivals, double sample_rate, std::size_t length);

/// Direct sound plus specular reflections up to n_O, A-format encoded.
AmbisonicIR compute_lor(const SceneGraph& scene, const PositionPair& pair, LorOrder n_o = {},
                        double sample_rate = kDefaultSampleRate, std::size_t length = 0);

/// Sample count that holds every arrival of `arrivals` plus the kernel tail.
std::size_t length_for(const std::vector<Arrival>& arrivals);

/// High-order image-source IR of an axis-aligned shoebox via the image
/// lattice. Throws kUnsupportedScene for other scenes.
AmbisonicIR simulate_reference(const SceneGraph& shoebox, const PositionPair& pair, int max_order,
                               double sample_rate = kDefaultSampleRate, std::size_t length = 0);

/// Lattice arrivals behind simulate_reference, sorted by (order, delay).
std::vector<Arrival> reference_arrivals(const SceneGraph& shoebox, const PositionPair& pair, int max_order,
                                        double sample_rate = kDefaultSampleRate);

}  // namespace srir
