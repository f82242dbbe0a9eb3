#include "srir/image_source.hpp"

#include <algorithm>
#include <unordered_map>

#include "srir/error.hpp"

namespace srir {

LorOrder::LorOrder(int n) : n_(n) {
  if (n < 0) fail(ErrorCode::kDomain, "reflection order must be >= 0");
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Merges images of one order whose positions agree within `tol`.
class ImageMerger {
 public:
  ImageMerger(double cell, double tol) : cell_(cell), tol_(tol) {}

  void add(std::vector<ImageSource>& images, ImageSource&& img) {
    const CellKey key = key_of(img.position);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({key.x + dx, key.y + dy, key.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t idx : it->second) {
            ImageSource& other = images[idx];
            if (norm(other.position - img.position) <= tol_) {
              for (auto& p : img.plane_paths) other.plane_paths.push_back(std::move(p));
              return;
            }
          }
        }
      }
    }
    cells_[key].push_back(images.size());
    images.push_back(std::move(img));
  }

 private:
  CellKey key_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_)),
            static_cast<std::int64_t>(std::floor(p.z / cell_))};
  }

  double cell_;
  double tol_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

double scene_scale(const SceneGraph& scene) {
  return scene.empty() ? 1.0 : std::max(1.0, norm(scene.bounding_box().extent()));
}

}  // namespace

ImageSourceEngine::ImageSourceEngine(const SceneGraph& scene)
    : scene_(&scene), groups_(PlaneGroups::build(scene)), bvh_(scene) {}

std::vector<ImageSource> ImageSourceEngine::enumerate(const Vec3& source, int max_order) const {
  if (max_order < 0) fail(ErrorCode::kDomain, "max_order must be >= 0");
  if (!scene_->empty() && !scene_->bounding_box().contains_strictly(source)) {
    fail(ErrorCode::kDomain, "source outside scene bounding box");
  }
  const double scale = scene_scale(*scene_);
  const double on_plane_tol = 1e-12 * scale;

  std::vector<ImageSource> all;
  ImageSource direct;
  direct.position = source;
  direct.order = 0;
  direct.plane_paths.push_back({});
  all.push_back(direct);

  std::size_t level_begin = 0;
  std::size_t level_end = 1;
  for (int order = 1; order <= max_order; ++order) {
    std::vector<ImageSource> level;
    ImageMerger merger(1e-6 * scale, 1e-9 * scale);
    for (std::size_t i = level_begin; i < level_end; ++i) {
      const ImageSource& parent = all[i];
      for (std::size_t p = 0; p < groups_.planes.size(); ++p) {
        const Plane& plane = groups_.planes[p];
        if (std::abs(plane.signed_distance(parent.position)) <= on_plane_tol) continue;
        ImageSource child;
        for (const auto& path : parent.plane_paths) {
          if (!path.empty() && path.back() == p) continue;
          auto extended = path;
          extended.push_back(p);
          child.plane_paths.push_back(std::move(extended));
        }
        if (child.plane_paths.empty()) continue;
        child.position = plane.mirror(parent.position);
        child.order = order;
        merger.add(level, std::move(child));
      }
    }
    for (auto& img : level) all.push_back(std::move(img));
    level_begin = level_end;
    level_end = all.size();
  }

  for (ImageSource& img : all) {
    std::sort(img.plane_paths.begin(), img.plane_paths.end());
    img.face_path.clear();
    img.band_gains = uniform_bands(1.0);
    for (std::size_t plane : img.plane_paths.front()) {
      const std::size_t f = groups_.faces[plane].front();
      img.face_path.push_back(f);
      for (std::size_t b = 0; b < kNumBands; ++b) img.band_gains[b] *= scene_->face(f).reflectivity[b];
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const ImageSource& a, const ImageSource& b) {
    if (a.order != b.order) return a.order < b.order;
    return a.plane_paths.front() < b.plane_paths.front();
  });
  return all;
}

std::optional<ValidatedPath> ImageSourceEngine::validate_plane_path(const ImageSource& image,
                                                                    const std::vector<std::size_t>& planes,
                                                                    const Vec3& listener) const {
  ValidatedPath out;
  out.reflection_points.resize(planes.size());
  out.faces.resize(planes.size());
  Vec3 from = listener;
  Vec3 target = image.position;
  std::size_t skip[2];
  std::size_t n_skip = 0;
  for (std::size_t step = planes.size(); step-- > 0;) {
    const std::size_t plane_id = planes[step];
    const Plane& plane = groups_.planes[plane_id];
    const double d_from = plane.signed_distance(from);
    const double d_target = plane.signed_distance(target);
    if (!(d_from * d_target < 0.0)) return std::nullopt;
    const double t = d_from / (d_from - d_target);
    const Vec3 hit = from + (target - from) * t;
    std::optional<std::size_t> face;
    for (std::size_t f : groups_.faces[plane_id]) {
      if (point_in_triangle(scene_->face(f), hit)) {
        face = f;
        break;
      }
    }
    if (!face) return std::nullopt;
    skip[n_skip++] = plane_id;
    if (bvh_.occluded(from, hit, groups_, std::span<const std::size_t>(skip, n_skip))) return std::nullopt;
    out.reflection_points[step] = hit;
    out.faces[step] = *face;
    for (std::size_t b = 0; b < kNumBands; ++b) out.band_gains[b] *= scene_->face(*face).reflectivity[b];
    skip[0] = plane_id;
    n_skip = 1;
    from = hit;
    target = plane.mirror(target);
  }
  // `target` is now the real source (up to rounding).
  if (bvh_.occluded(from, target, groups_, std::span<const std::size_t>(skip, n_skip))) return std::nullopt;
  out.length = distance(image.position, listener);
  out.arrival_direction = normalized(image.position - listener);
  return out;
}

std::optional<ValidatedPath> ImageSourceEngine::check_visibility(const ImageSource& image,
                                                                 const Vec3& listener) const {
  for (const auto& planes : image.plane_paths) {
    if (auto path = validate_plane_path(image, planes, listener)) return path;
  }
  return std::nullopt;
}

std::vector<Arrival> ImageSourceEngine::arrivals(const PositionPair& pair, int max_order, double sample_rate) const {
  validate_pair(*scene_, pair);
  std::vector<Arrival> out;
  for (const ImageSource& img : enumerate(pair.source, max_order)) {
    const auto path = check_visibility(img, pair.listener);
    if (!path) continue;
    Arrival a;
    a.order = img.order;
    a.faces = path->faces;
    a.length = path->length;
    a.delay_samples = path->length / kSpeedOfSound * sample_rate;
    a.amplitude = band_mean(path->band_gains) / path->length;
    a.direction = path->arrival_direction;
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) {
    if (a.order != b.order) return a.order < b.order;
    return a.faces < b.faces;
  });
  return out;
}

std::vector<ImageSource> enumerate_image_sources(const SceneGraph& scene, const Vec3& source, int max_order) {
  return ImageSourceEngine(scene).enumerate(source, max_order);
}

std::optional<ValidatedPath> check_visibility(const SceneGraph& scene, const ImageSource& image,
                                              const Vec3& listener) {
  return ImageSourceEngine(scene).check_visibility(image, listener);
}

// --- encoding ------------------------------------------------------------

std::array<double, kAmbiChannels> capsule_gains(const Vec3& direction,
                                                const std::array<Vec3, kAmbiChannels>& capsules) {
  std::array<double, kAmbiChannels> g{};
  for (std::size_t c = 0; c < kAmbiChannels; ++c) g[c] = 0.5 * (1.0 + dot(direction, capsules[c]));
  return g;
}

std::array<double, 16> fractional_delay_kernel(double delay_samples, long& first) {
  constexpr int kHalf = 8;
  const double base = std::floor(delay_samples);
  first = static_cast<long>(base) - (kHalf - 1);
  std::array<double, 16> taps{};
  double sum = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double x = static_cast<double>(first + k) - delay_samples;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double window = std::abs(x) < kHalf ? 0.5 * (1.0 + std::cos(kPi * x / kHalf)) : 0.0;
    taps[k] = sinc * window;
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

void encode_contribution(const Vec3& direction, double amplitude, double delay_samples, AmbisonicIR& ir) {
  const auto n = static_cast<double>(ir.length());
  if (!(delay_samples >= 0.0) || delay_samples > n - 1.0) {
    fail(ErrorCode::kRange, "delay " + std::to_string(delay_samples) + " outside IR of " +
                                std::to_string(ir.length()) + " samples");
  }
  const auto gains = capsule_gains(direction, ir.capsule_orientations);
  long first = 0;
  const auto taps = fractional_delay_kernel(delay_samples, first);
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    auto& ch = ir.channels[c];
    const double a = amplitude * gains[c];
    for (long k = 0; k < 16; ++k) {
      const long idx = first + k;
      if (idx < 0 || idx >= static_cast<long>(ch.size())) continue;
      ch[static_cast<std::size_t>(idx)] += a * taps[static_cast<std::size_t>(k)];
    }
  }
}

std::size_t length_for(const std::vector<Arrival>& arrivals) {
  double max_delay = 0.0;
  for (const Arrival& a : arrivals) max_delay = std::max(max_delay, a.delay_samples);
  return static_cast<std::size_t>(std::ceil(max_delay)) + 9;
}

AmbisonicIR render_arrivals(const std::vector<Arrival>& arrivals, double sample_rate, std::size_t length) {
  AmbisonicIR ir = AmbisonicIR::zeros(length, sample_rate);
  for (const Arrival& a : arrivals) {
    if (a.delay_samples > static_cast<double>(length) - 1.0) continue;
    encode_contribution(a.direction, a.amplitude, a.delay_samples, ir);
  }
  return ir;
}

AmbisonicIR compute_lor(const SceneGraph& scene, const PositionPair& pair, LorOrder n_o, double sample_rate,
                        std::size_t length) {
  const ImageSourceEngine engine(scene);
  const auto arr = engine.arrivals(pair, n_o.value(), sample_rate);
  return render_arrivals(arr, sample_rate, length == 0 ? length_for(arr) : length);
}

// --- shoebox lattice oracle ---------------------------------------------

std::vector<Arrival> reference_arrivals(const SceneGraph& shoebox, const PositionPair& pair, int max_order,
                                        double sample_rate) {
  const auto info = detect_shoebox(shoebox);
  if (!info) fail(ErrorCode::kUnsupportedScene, "simulate_reference needs an axis-aligned 12-triangle shoebox");
  if (max_order < 0 || max_order > 40) fail(ErrorCode::kDomain, "reference max_order must be in [0, 40]");
  validate_pair(shoebox, pair);

  const Vec3 lo = info->box.min;
  const Vec3 len = info->box.extent();
  const Vec3 s = pair.source - lo;
  const Vec3 r = pair.listener - lo;

  // Per axis, 1-D image index i: |i| reflections; near wall (coordinate 0)
  // and far wall (coordinate L) hit counts follow from the sign of i.
  auto image_coord = [](double x, double l, int i) {
    return (i % 2 == 0) ? x + i * l : (i + 1) * l - x;
  };
  auto hits = [](int i, int& near_hits, int& far_hits) {
    const int a = std::abs(i);
    if (i >= 0) {
      far_hits = (a + 1) / 2;
      near_hits = a / 2;
    } else {
      near_hits = (a + 1) / 2;
      far_hits = a / 2;
    }
  };

  std::vector<Arrival> out;
  for (int i = -max_order; i <= max_order; ++i) {
    const int rem_i = max_order - std::abs(i);
    for (int j = -rem_i; j <= rem_i; ++j) {
      const int rem_j = rem_i - std::abs(j);
      for (int k = -rem_j; k <= rem_j; ++k) {
        const std::array<int, 3> idx{i, j, k};
        Vec3 img;
        Bands gains = uniform_bands(1.0);
        for (std::size_t axis = 0; axis < 3; ++axis) {
          img[axis] = image_coord(s[axis], len[axis], idx[axis]);
          int near_hits = 0;
          int far_hits = 0;
          hits(idx[axis], near_hits, far_hits);
          const Bands& near_r = info->walls[2 * axis].reflectivity;
          const Bands& far_r = info->walls[2 * axis + 1].reflectivity;
          for (std::size_t b = 0; b < kNumBands; ++b) {
            gains[b] *= std::pow(near_r[b], near_hits) * std::pow(far_r[b], far_hits);
          }
        }
        Arrival a;
        a.order = std::abs(i) + std::abs(j) + std::abs(k);
        a.length = distance(img, r);
        a.delay_samples = a.length / kSpeedOfSound * sample_rate;
        a.amplitude = band_mean(gains) / a.length;
        a.direction = normalized(img - r);
        out.push_back(std::move(a));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) {
    if (a.order != b.order) return a.order < b.order;
    return a.delay_samples < b.delay_samples;
  });
  return out;
}

AmbisonicIR simulate_reference(const SceneGraph& shoebox, const PositionPair& pair, int max_order,
                               double sample_rate, std::size_t length) {
  const auto arr = reference_arrivals(shoebox, pair, max_order, sample_rate);
  return render_arrivals(arr, sample_rate, length == 0 ? length_for(arr) : length);
}

}  // namespace srir
