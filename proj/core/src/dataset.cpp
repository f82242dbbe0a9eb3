#include "srir/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "srir/dsp/filters.hpp"
#include "srir/error.hpp"
#include "srir/image_source.hpp"
#include "srir/metrics.hpp"
#include "srir/param_synth.hpp"
#include "srir/seed.hpp"

namespace srir {

namespace fs = std::filesystem;

namespace {

double unit_draw(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void check_range(Range r, const char* what) {
  if (!(r.lo >= 0.0 && r.lo <= r.hi && r.hi <= 1.0)) {
    fail(ErrorCode::kDomain, std::string(what) + " range must satisfy 0 <= lo <= hi <= 1");
  }
}

/// Lowest face index sharing each face's plane.
std::vector<std::size_t> plane_keys(const SceneGraph& scene) {
  const std::size_t n = scene.size();
  const double scale = std::max(1.0, norm(scene.bounding_box().extent()));
  std::vector<std::size_t> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    key[i] = i;
    const Face& fi = scene.face(i);
    const double di = dot(fi.normal, fi.vertices[0]);
    for (std::size_t j = 0; j < i; ++j) {
      const Face& fj = scene.face(j);
      if (norm(fi.normal - fj.normal) < 1e-9 && std::abs(dot(fj.normal, fj.vertices[0]) - di) < 1e-9 * scale) {
        key[i] = key[j];
        break;
      }
    }
  }
  return key;
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::kParse, "expected a 3-element coordinate array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string entry_name(const std::string& scene_id, std::size_t variant, std::size_t pair) {
  return scene_id + "_v" + std::to_string(variant) + "_p" + std::to_string(pair);
}

}  // namespace

SceneGraph perturb_materials(const SceneGraph& scene, Range reflectivity, Range scattering, std::uint64_t seed,
                             PerturbGrouping grouping) {
  check_range(reflectivity, "reflectivity");
  check_range(scattering, "scattering");
  std::vector<std::size_t> key(scene.size());
  if (grouping == PerturbGrouping::kPerPlane) {
    key = plane_keys(scene);
  } else {
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = i;
  }
  std::vector<Material> materials(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    for (std::size_t b = 0; b < kNumBands; ++b) {
      const std::uint64_t k = (static_cast<std::uint64_t>(key[i]) << 8) | (b << 1);
      materials[i].reflectivity[b] =
          reflectivity.lo + (reflectivity.hi - reflectivity.lo) * unit_draw(derive_seed(seed, k));
      materials[i].scattering[b] = scattering.lo + (scattering.hi - scattering.lo) * unit_draw(derive_seed(seed, k | 1));
    }
  }
  return scene.with_materials(materials);
}

std::vector<PositionPair> sample_positions(const SceneGraph& scene, std::size_t n, double min_clearance,
                                           std::uint64_t seed) {
  if (!(min_clearance >= 0.0)) fail(ErrorCode::kDomain, "clearance must be non-negative");
  const Aabb box = scene.bounding_box();
  const Vec3 ext = box.extent();
  std::mt19937_64 rng(derive_seed(seed, 0x706f736974696f6eULL));
  auto draw = [&] {
    Vec3 p;
    for (std::size_t a = 0; a < 3; ++a) p[a] = box.min[a] + ext[a] * unit_draw(rng());
    return p;
  };
  auto clear = [&](const Vec3& p) {
    if (!box.contains_strictly(p)) return false;
    for (const Face& f : scene.faces()) {
      if (std::abs(dot(f.normal, p - f.vertices[0])) < min_clearance) return false;
    }
    return true;
  };

  std::vector<PositionPair> pairs;
  pairs.reserve(n);
  std::size_t rejections = 0;
  while (pairs.size() < n) {
    const Vec3 s = draw();
    const Vec3 l = draw();
    if (clear(s) && clear(l) && distance(s, l) >= kMinPairDistance) {
      pairs.push_back({s, l});
      rejections = 0;
    } else if (++rejections >= kMaxConsecutiveRejections) {
      fail(ErrorCode::kInfeasibleScene, "no valid position pair after " + std::to_string(kMaxConsecutiveRejections) +
                                            " consecutive draws (clearance " + std::to_string(min_clearance) +
                                            " m)");
    }
  }
  return pairs;
}

void DatasetConfig::validate() const {
  if (variants_per_scene == 0 || pairs_per_variant == 0) fail(ErrorCode::kConfig, "dataset counts must be >= 1");
  if (max_order < lor_order || lor_order < 0 || max_order > 40) {
    fail(ErrorCode::kConfig, "need 0 <= lor_order <= max_order <= 40");
  }
  check_range(reflectivity, "reflectivity");
  check_range(scattering, "scattering");
  if (!(min_clearance >= 0.0) || !(sample_rate > 0.0)) fail(ErrorCode::kConfig, "invalid clearance or sample rate");
}

nlohmann::json DatasetConfig::to_json() const {
  return {{"variants_per_scene", variants_per_scene},
          {"pairs_per_variant", pairs_per_variant},
          {"max_order", max_order},
          {"lor_order", lor_order},
          {"reflectivity_range", {reflectivity.lo, reflectivity.hi}},
          {"scattering_range", {scattering.lo, scattering.hi}},
          {"min_clearance", min_clearance},
          {"sample_rate", sample_rate},
          {"seed", seed}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& doc) {
  DatasetConfig c;
  try {
    c.variants_per_scene = doc.value("variants_per_scene", c.variants_per_scene);
    c.pairs_per_variant = doc.value("pairs_per_variant", c.pairs_per_variant);
    c.max_order = doc.value("max_order", c.max_order);
    c.lor_order = doc.value("lor_order", c.lor_order);
    if (doc.contains("reflectivity_range")) {
      c.reflectivity = {doc["reflectivity_range"].at(0).get<double>(), doc["reflectivity_range"].at(1).get<double>()};
    }
    if (doc.contains("scattering_range")) {
      c.scattering = {doc["scattering_range"].at(0).get<double>(), doc["scattering_range"].at(1).get<double>()};
    }
    c.min_clearance = doc.value("min_clearance", c.min_clearance);
    c.sample_rate = doc.value("sample_rate", c.sample_rate);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("dataset config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<NamedScene> default_base_scenes() {
  const Bands refl = uniform_bands(0.8);
  const Bands scat = uniform_bands(0.1);
  return {{"booth", make_shoebox({3.0, 2.5, 2.4}, refl, scat)},
          {"office", make_shoebox({6.0, 4.5, 3.0}, refl, scat)},
          {"classroom", make_shoebox({10.0, 8.0, 4.0}, refl, scat)},
          {"hall", make_shoebox({20.0, 15.0, 8.0}, refl, scat)}};
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    list.push_back({{"scene_id", e.scene_id},
                    {"variant_id", e.variant_id},
                    {"pair_id", e.pair_id},
                    {"source", vec_json(e.pair.source)},
                    {"listener", vec_json(e.pair.listener)},
                    {"scene_path", e.scene_path.generic_string()},
                    {"srir_path", e.srir_path.generic_string()},
                    {"lor_path", e.lor_path.generic_string()},
                    {"params_path", e.params_path.generic_string()}});
  }
  return {{"format", "srirkit-dataset"}, {"version", 1}, {"config", config.to_json()}, {"entries", std::move(list)}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& doc, const fs::path& root) {
  if (!doc.is_object() || doc.value("format", "") != "srirkit-dataset") {
    fail(ErrorCode::kParse, "not a dataset manifest");
  }
  DatasetManifest m;
  m.root = root;
  m.config = DatasetConfig::from_json(doc.at("config"));
  try {
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.scene_id = j.at("scene_id").get<std::string>();
      e.variant_id = j.at("variant_id").get<std::size_t>();
      e.pair_id = j.value("pair_id", std::size_t{0});
      e.pair = {vec_from_json(j.at("source")), vec_from_json(j.at("listener"))};
      e.scene_path = j.at("scene_path").get<std::string>();
      e.srir_path = j.at("srir_path").get<std::string>();
      e.lor_path = j.at("lor_path").get<std::string>();
      e.params_path = j.at("params_path").get<std::string>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("manifest entry: ") + e.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest) {
  const fs::path path = manifest.root / kManifestName;
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
  os << manifest.to_json().dump(2) << '\n';
  if (!os) fail(ErrorCode::kIo, "failed writing " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestName : path;
  std::ifstream is(file);
  if (!is) fail(ErrorCode::kIo, "cannot open manifest " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, file.string() + ": " + e.what());
  }
  return DatasetManifest::from_json(doc, file.parent_path());
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::tuple<std::string, std::size_t, double, double, double, double, double, double>> seen;
  for (const auto& e : manifest.entries) {
    for (const fs::path& p : {e.scene_path, e.srir_path, e.lor_path, e.params_path}) {
      if (!fs::exists(manifest.resolve(p))) {
        fail(ErrorCode::kIo, "entry " + entry_name(e.scene_id, e.variant_id, e.pair_id) + ": missing " +
                                 manifest.resolve(p).string());
      }
    }
    const auto key = std::make_tuple(e.scene_id, e.variant_id, e.pair.source.x, e.pair.source.y, e.pair.source.z,
                                     e.pair.listener.x, e.pair.listener.y, e.pair.listener.z);
    if (!seen.insert(key).second) {
      fail(ErrorCode::kConfig, "duplicate entry " + entry_name(e.scene_id, e.variant_id, e.pair_id));
    }
  }
}

DatasetManifest generate_dataset(const std::vector<NamedScene>& scenes, const DatasetConfig& config,
                                 const fs::path& out_dir, const std::function<void(std::size_t, std::size_t)>& progress) {
  config.validate();
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (s.id.empty() || !ids.insert(s.id).second) fail(ErrorCode::kConfig, "scene ids must be unique and non-empty");
    if (!detect_shoebox(s.scene)) {
      fail(ErrorCode::kUnsupportedScene, "scene " + s.id + " is not a shoebox; the ground-truth oracle needs one");
    }
  }

  DatasetManifest manifest;
  manifest.config = config;
  manifest.root = out_dir;
  for (const char* sub : {"scenes", "srir", "lor", "params"}) {
    std::error_code ec;
    fs::create_directories(out_dir / sub, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }

  const std::size_t total = scenes.size() * config.variants_per_scene * config.pairs_per_variant;
  std::size_t done = 0;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const NamedScene& base = scenes[si];
    for (std::size_t v = 0; v < config.variants_per_scene; ++v) {
      const std::uint64_t variant_seed = derive_seed(config.seed, (si << 20) | v);
      const SceneGraph scene = perturb_materials(base.scene, config.reflectivity, config.scattering, variant_seed,
                                                 PerturbGrouping::kPerPlane);
      const fs::path scene_rel = fs::path("scenes") / (base.id + "_v" + std::to_string(v) + ".json");
      const std::vector<PositionPair> pairs =
          sample_positions(scene, config.pairs_per_variant, config.min_clearance, variant_seed);
      try {
        save_scene_json(scene, out_dir / scene_rel);
      } catch (const Error& e) {
        fail(ErrorCode::kIo, "scene " + base.id + " variant " + std::to_string(v) + ": " + e.what());
      }
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const std::string name = entry_name(base.id, v, p);
        ManifestEntry e;
        e.scene_id = base.id;
        e.variant_id = v;
        e.pair_id = p;
        e.pair = pairs[p];
        e.scene_path = scene_rel;
        e.srir_path = fs::path("srir") / (name + ".wav");
        e.lor_path = fs::path("lor") / (name + ".wav");
        e.params_path = fs::path("params") / (name + ".json");

        const AmbisonicIR srir = simulate_reference(scene, e.pair, config.max_order, config.sample_rate);
        const AmbisonicIR lor = compute_lor(scene, e.pair, LorOrder{config.lor_order}, config.sample_rate);
        const PerceptualParams params = extract_params(srir, lor);
        try {
          IrSidecar side = sidecar_for(srir);
          side.source = e.pair.source;
          side.listener = e.pair.listener;
          save_ir(srir, out_dir / e.srir_path, side);
          side.lor_order = config.lor_order;
          save_ir(lor, out_dir / e.lor_path, side);
          save_params(params, out_dir / e.params_path);
        } catch (const Error& err) {
          fail(ErrorCode::kIo, "entry " + name + ": " + err.what());
        }
        manifest.entries.push_back(std::move(e));
        if (progress) progress(++done, total);
      }
    }
  }
  save_manifest(manifest);
  return manifest;
}

// --- diversity analysis ------------------------------------------------------

Bands band_energy_spectrum(const AmbisonicIR& ir) {
  const std::vector<double> omni = ir.omni();
  Bands e{};
  double total = 0.0;
  for (std::size_t b = 0; b < kNumBands; ++b) {
    const auto sections = dsp::octave_band_filter(b, ir.sample_rate);
    const std::vector<double> y = dsp::filtfilt(sections, omni);
    for (double v : y) e[b] += v * v;
    total += e[b];
  }
  if (total > 0.0) {
    for (double& v : e) v /= total;
  }
  return e;
}

PcaResult pca(const Eigen::MatrixXd& data, std::size_t k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2 || d == 0) fail(ErrorCode::kDomain, "PCA needs at least 2 rows");
  if (k == 0 || static_cast<Eigen::Index>(k) > d) fail(ErrorCode::kDomain, "PCA component count out of range");

  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kNumerical, "covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  r.eigenvalues = solver.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < d; ++i) r.eigenvalues(i) = std::max(0.0, r.eigenvalues(i));
  r.components.resize(static_cast<Eigen::Index>(k), d);
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(c));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    r.components.row(static_cast<Eigen::Index>(c)) = v.transpose();
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  r.zero_variance = cov.trace() <= 1e-30 * scale;
  if (r.zero_variance) {
    r.coords = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(k));
    r.eigenvalues.setZero();
  } else {
    r.coords = centred * r.components.transpose();
  }
  return r;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::kDomain, "histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  if (values.empty()) {
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

double DiversityReport::t60_ratio() const {
  if (t60.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(t60.begin(), t60.end());
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

DiversityReport analyze_diversity(const DatasetManifest& manifest, std::size_t bins) {
  if (manifest.entries.size() < 10) fail(ErrorCode::kDomain, "diversity analysis needs at least 10 entries");
  DiversityReport r;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(manifest.entries.size()), static_cast<Eigen::Index>(kNumBands));
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const AmbisonicIR ir = load_ir(manifest.resolve(e.srir_path));
    r.labels.push_back(entry_name(e.scene_id, e.variant_id, e.pair_id));
    r.spectra.push_back(band_energy_spectrum(ir));
    for (std::size_t b = 0; b < kNumBands; ++b) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = r.spectra.back()[b];
    }
    r.t60.push_back(t60_schroeder(ir));
  }
  r.pca = pca(data, 2);
  r.t60_histogram = histogram(r.t60, bins);
  return r;
}

void write_diversity_csv(const DiversityReport& report, const fs::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
  os << "entry,pc1,pc2,t60";
  for (std::size_t b = 0; b < kNumBands; ++b) os << ",band" << b;
  os << '\n';
  os.precision(10);
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    os << report.labels[i] << ',' << report.pca.coords(row, 0) << ',' << report.pca.coords(row, 1) << ','
       << report.t60[i];
    for (double v : report.spectra[i]) os << ',' << v;
    os << '\n';
  }
  if (!os) fail(ErrorCode::kIo, "failed writing " + path.string());
}

void write_histogram_csv(const DiversityReport& report, const fs::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
  os << "t60_lo,t60_hi,count\n";
  const Histogram& h = report.t60_histogram;
  for (std::size_t i = 0; i < h.counts.size(); ++i) os << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  if (!os) fail(ErrorCode::kIo, "failed writing " + path.string());
}

void write_diversity_svg(const DiversityReport& report, const fs::path& path) {
  constexpr double W = 360.0, H = 300.0, M = 40.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * W << "\" height=\"" << H << "\" "
      << "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Scatter of the first two components.
  const Eigen::MatrixXd& c = report.pca.coords;
  double x0 = c.rows() ? c.col(0).minCoeff() : 0.0, x1 = c.rows() ? c.col(0).maxCoeff() : 1.0;
  double y0 = c.rows() ? c.col(1).minCoeff() : 0.0, y1 = c.rows() ? c.col(1).maxCoeff() : 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  svg << "<text x=\"" << W / 2 << "\" y=\"16\" text-anchor=\"middle\">PCA of band energy spectra</text>\n";
  svg << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double px = M + (c(i, 0) - x0) / (x1 - x0) * (W - 2 * M);
    const double py = H - M - (c(i, 1) - y0) / (y1 - y0) * (H - 2 * M);
    svg << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
  }
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">PC1</text>\n";
  svg << "<text x=\"12\" y=\"" << H / 2 << "\" transform=\"rotate(-90 12 " << H / 2 << ")\" text-anchor=\"middle\">PC2</text>\n";

  // T60 histogram.
  const Histogram& h = report.t60_histogram;
  const std::size_t peak = h.counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  svg << "<text x=\"" << W + W / 2 << "\" y=\"16\" text-anchor=\"middle\">T60 histogram</text>\n";
  svg << "<rect x=\"" << W + M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double bw = (W - 2 * M) / static_cast<double>(std::max<std::size_t>(1, h.counts.size()));
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double bh = static_cast<double>(h.counts[i]) / static_cast<double>(peak) * (H - 2 * M);
    svg << "<rect x=\"" << W + M + static_cast<double>(i) * bw << "\" y=\"" << H - M - bh << "\" width=\"" << bw * 0.9
        << "\" height=\"" << bh << "\" fill=\"indianred\"/>\n";
  }
  if (!h.edges.empty()) {
    svg << "<text x=\"" << W + M << "\" y=\"" << H - M + 14 << "\">" << h.edges.front() << " s</text>\n";
    svg << "<text x=\"" << 2 * W - M << "\" y=\"" << H - M + 14 << "\" text-anchor=\"end\">" << h.edges.back()
        << " s</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
  os << svg.str();
  if (!os) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<nn::TrainingExample> load_examples(const DatasetManifest& manifest, const nn::ModelConfig& cfg,
                                               std::size_t limit) {
  const std::size_t n = limit == 0 ? manifest.entries.size() : std::min(limit, manifest.entries.size());
  std::vector<nn::TrainingExample> out;
  out.reserve(n);
  std::map<fs::path, SceneGraph> scenes;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = manifest.entries[i];
    auto it = scenes.find(e.scene_path);
    if (it == scenes.end()) it = scenes.emplace(e.scene_path, load_scene_json(manifest.resolve(e.scene_path))).first;
    const AmbisonicIR lor = load_ir(manifest.resolve(e.lor_path));
    const PerceptualParams params = load_params(manifest.resolve(e.params_path));
    out.push_back(nn::make_example(it->second, e.pair, lor, params, cfg));
  }
  return out;
}

}  // namespace srir
