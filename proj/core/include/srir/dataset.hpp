#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "srir/ambisonic_ir.hpp"
#include "srir/nn/train.hpp"
#include "srir/scene.hpp"

namespace srir {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// How perturbation draws are keyed. kPerFace keys every face by its own
/// index. kPerPlane keys coplanar faces by the lowest index in their plane,
/// so the two triangles of a shoebox wall stay identical and the scene
/// remains usable by the shoebox oracle.
enum class PerturbGrouping { kPerFace, kPerPlane };

/// Redraws every reflectivity and scattering value uniformly in its range,
/// deterministically per (seed, face key, band). Throws kDomain on a range
/// outside 0 <= lo <= hi <= 1.
SceneGraph perturb_materials(const SceneGraph& scene, Range reflectivity, Range scattering, std::uint64_t seed,
                             PerturbGrouping grouping = PerturbGrouping::kPerFace);

/// Rejection-samples `n` pairs inside the bounding box with both points at
/// least `min_clearance` from every face plane and at least
/// kMinPairDistance apart. Throws kInfeasibleScene after
/// kMaxConsecutiveRejections failed draws in a row.
inline constexpr double kMinPairDistance = 0.3;
inline constexpr std::size_t kMaxConsecutiveRejections = 100000;
std::vector<PositionPair> sample_positions(const SceneGraph& scene, std::size_t n, double min_clearance,
                                           std::uint64_t seed);

struct DatasetConfig {
  std::size_t variants_per_scene = 8;
  std::size_t pairs_per_variant = 8;
  int max_order = 20;
  int lor_order = 2;
  Range reflectivity{0.3, 0.95};
  Range scattering{0.0, 1.0};
  double min_clearance = 0.5;
  double sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& doc);
};

struct NamedScene {
  std::string id;
  SceneGraph scene;
};

/// The four desk-scale base shoeboxes.
std::vector<NamedScene> default_base_scenes();

/// Paths are relative to the manifest's directory.
struct ManifestEntry {
  std::string scene_id;
  std::size_t variant_id = 0;
  std::size_t pair_id = 0;
  PositionPair pair;
  std::filesystem::path scene_path;
  std::filesystem::path srir_path;
  std::filesystem::path lor_path;
  std::filesystem::path params_path;
};

struct DatasetManifest {
  DatasetConfig config;
  std::vector<ManifestEntry> entries;
  /// Directory holding manifest.json; not serialized.
  std::filesystem::path root;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return root / p; }
  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& doc, const std::filesystem::path& root);
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes per entry the oracle SRIR, the LoR and the extracted parameters,
/// then `out_dir/manifest.json`. Deterministic in the config seed. Disk
/// failures are rethrown as kIo naming the entry.
DatasetManifest generate_dataset(const std::vector<NamedScene>& scenes, const DatasetConfig& config,
                                 const std::filesystem::path& out_dir,
                                 const std::function<void(std::size_t, std::size_t)>& progress = {});

void save_manifest(const DatasetManifest& manifest);
/// Accepts the manifest file or its directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
/// Throws kIo for a missing referenced file, kConfig for a duplicate entry.
void validate_manifest(const DatasetManifest& manifest);

// --- diversity analysis ------------------------------------------------------

/// Octave-band energies of the channel-mean signal, normalized to unit sum.
Bands band_energy_spectrum(const AmbisonicIR& ir);

struct PcaResult {
  Eigen::MatrixXd coords;      // n x k projections of the centred data
  Eigen::MatrixXd components;  // k x d, rows ordered by decreasing eigenvalue
  Eigen::VectorXd eigenvalues; // all d, decreasing
  Eigen::VectorXd mean;
  bool zero_variance = false;
};

/// PCA by eigendecomposition of the sample covariance (n - 1 normalization).
/// Each component is signed so that its largest-magnitude loading is
/// positive. All-identical rows give zero coordinates and zero_variance.
PcaResult pca(const Eigen::MatrixXd& data, std::size_t k);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the last bin is closed.
Histogram histogram(const std::vector<double>& values, std::size_t bins);

struct DiversityReport {
  std::vector<std::string> labels;
  std::vector<Bands> spectra;
  std::vector<double> t60;
  PcaResult pca;
  Histogram t60_histogram;

  double t60_ratio() const;
};

/// Needs at least 10 entries (kDomain otherwise).
DiversityReport analyze_diversity(const DatasetManifest& manifest, std::size_t bins = 20);

void write_diversity_csv(const DiversityReport& report, const std::filesystem::path& path);
void write_histogram_csv(const DiversityReport& report, const std::filesystem::path& path);
/// Two-panel SVG: PCA scatter and T60 histogram.
void write_diversity_svg(const DiversityReport& report, const std::filesystem::path& path);

// --- training on a manifest --------------------------------------------------

/// Builds training examples for the first `limit` entries (0 = all).
std::vector<nn::TrainingExample> load_examples(const DatasetManifest& manifest, const nn::ModelConfig& cfg,
                                               std::size_t limit = 0);

}  // namespace srir
