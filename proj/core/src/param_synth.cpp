#include "srir/param_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>

#include "srir/dsp/filters.hpp"
#include "srir/error.hpp"
#include "srir/metrics.hpp"
#include "srir/seed.hpp"

namespace srir {
namespace {

double sum_squares(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

void PerceptualParams::validate() const {
  if (!(t60 > 0.0) || !std::isfinite(t60)) fail(ErrorCode::kDomain, "t60 must be positive");
  if (!(g_er >= 0.0) || !(g_lr >= 0.0)) fail(ErrorCode::kDomain, "gains must be non-negative");
  if (!(sample_rate > 0.0)) fail(ErrorCode::kDomain, "sample rate must be positive");
  double e = 0.0;
  for (const auto& ch : h_er_norm) {
    if (ch.size() != h_er_norm[0].size()) fail(ErrorCode::kShape, "h_er_norm channels differ in length");
    e += sum_squares(ch);
  }
  if (e != 0.0 && std::abs(e - 1.0) > 1e-6) fail(ErrorCode::kDomain, "h_er_norm must have unit energy");
  if (e_lr.size() != kNumBands) fail(ErrorCode::kShape, "e_lr must have one row per band");
  for (const auto& row : e_lr) {
    if (row.size() < 2 || row.size() != e_lr[0].size()) fail(ErrorCode::kShape, "e_lr rows must share a length >= 2");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::kDomain, "envelope entries must be finite and >= 0");
    }
  }
}

std::vector<double> bandlimited_noise(std::size_t band, std::size_t length, double sample_rate, std::uint64_t seed) {
  if (length == 0) fail(ErrorCode::kDomain, "noise length must be positive");
  const auto sections = dsp::octave_band_filter(band, sample_rate);

  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(0x6e6f697365ULL + band)));
  std::vector<double> x(length);
  double mean = 0.0;
  for (double& v : x) {
    // 53 random bits mapped to [-1, 1); avoids implementation-defined distributions.
    v = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    mean += v;
  }
  mean /= static_cast<double>(length);
  for (double& v : x) v -= mean;

  std::vector<double> y = dsp::filtfilt(sections, x);
  const double e = sum_squares(y);
  if (!(e > 0.0)) fail(ErrorCode::kNumerical, "band-limited noise has zero energy");
  const double scale = 1.0 / std::sqrt(e);
  for (double& v : y) v *= scale;
  return y;
}

std::vector<double> interp_envelope(std::span<const double> envelope, std::size_t target_length) {
  const std::size_t e = envelope.size();
  if (e < 2) fail(ErrorCode::kDomain, "envelope needs at least 2 points");
  if (target_length == 0) fail(ErrorCode::kDomain, "interpolation target must be >= 1 sample");
  std::vector<double> out(target_length);
  if (target_length == 1) {
    out[0] = envelope[0];
    return out;
  }
  const double step = static_cast<double>(e - 1) / static_cast<double>(target_length - 1);
  for (std::size_t i = 0; i < target_length; ++i) {
    const double pos = static_cast<double>(i) * step;
    auto k = static_cast<std::size_t>(pos);
    if (k >= e - 1) k = e - 2;
    const double frac = pos - static_cast<double>(k);
    out[i] = envelope[k] + frac * (envelope[k + 1] - envelope[k]);
  }
  out.back() = envelope[e - 1];
  return out;
}

std::size_t late_length(double t60, double sample_rate) {
  const double seconds = std::max(t60, kMinLateSeconds);
  return static_cast<std::size_t>(std::ceil(seconds * sample_rate));
}

std::array<std::vector<double>, kAmbiChannels> late_reverb(const std::vector<std::vector<double>>& e_lr,
                                                           std::size_t length, double sample_rate,
                                                           std::uint64_t seed) {
  if (e_lr.size() != kNumBands) fail(ErrorCode::kShape, "e_lr must have one row per band");
  std::vector<std::vector<double>> shapes;
  shapes.reserve(kNumBands);
  for (const auto& row : e_lr) shapes.push_back(interp_envelope(row, length));

  std::array<std::vector<double>, kAmbiChannels> out;
  double energy = 0.0;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    out[c].assign(length, 0.0);
    for (std::size_t f = 0; f < kNumBands; ++f) {
      if (std::all_of(e_lr[f].begin(), e_lr[f].end(), [](double v) { return v == 0.0; })) continue;
      const auto noise = bandlimited_noise(f, length, sample_rate, seed ^ static_cast<std::uint64_t>(c));
      for (std::size_t t = 0; t < length; ++t) out[c][t] += shapes[f][t] * noise[t];
    }
    energy += sum_squares(out[c]);
  }
  if (energy > 0.0) {
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& ch : out) {
      for (double& v : ch) v *= scale;
    }
  }
  return out;
}

AmbisonicIR synthesize(const PerceptualParams& params, const AmbisonicIR& h_lor, std::uint64_t seed) {
  params.validate();
  if (h_lor.sample_rate != params.sample_rate) {
    fail(ErrorCode::kConfig, "LoR sample rate " + std::to_string(h_lor.sample_rate) + " differs from parameter rate " +
                                 std::to_string(params.sample_rate));
  }
  const std::size_t n_late = late_length(params.t60, params.sample_rate);
  const std::size_t n = std::max({n_late, h_lor.length(), params.er_length()});

  AmbisonicIR out = h_lor.padded_to(n);
  const auto late = late_reverb(params.e_lr, n_late, params.sample_rate, seed);
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    auto& ch = out.channels[c];
    const auto& er = params.h_er_norm[c];
    for (std::size_t t = 0; t < n; ++t) {
      const double early = t < er.size() ? params.g_er * er[t] : 0.0;
      const double tail = t < n_late ? params.g_lr * late[c][t] : 0.0;
      ch[t] = early + ch[t] + tail;
    }
  }
  return out;
}

std::size_t direct_arrival_index(const AmbisonicIR& h_s, const AmbisonicIR& h_lor) {
  const auto peak_of = [](const std::vector<double>& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      if (std::abs(x[i]) > std::abs(x[best])) best = i;
    }
    return x.empty() || x[best] == 0.0 ? std::optional<std::size_t>{} : std::optional<std::size_t>{best};
  };
  if (auto p = peak_of(h_lor.omni())) return *p;
  return peak_of(h_s.omni()).value_or(0);
}

PerceptualParams extract_params(const AmbisonicIR& h_s, const AmbisonicIR& h_lor, const ExtractOptions& options) {
  if (h_s.sample_rate != h_lor.sample_rate) fail(ErrorCode::kConfig, "SRIR and LoR sample rates differ");
  if (h_lor.length() > h_s.length()) {
    fail(ErrorCode::kAlignment, "LoR (" + std::to_string(h_lor.length()) + " samples) is longer than the SRIR (" +
                                    std::to_string(h_s.length()) + " samples)");
  }
  if (options.n_env_points < 2) fail(ErrorCode::kConfig, "need at least 2 envelope points");
  if (!(options.er_boundary_ms >= 0.0)) fail(ErrorCode::kConfig, "early/late boundary must be >= 0 ms");

  const double fs = h_s.sample_rate;
  const std::size_t n = h_s.length();
  const AmbisonicIR lor = h_lor.padded_to(n);
  const std::size_t direct = direct_arrival_index(h_s, h_lor);
  const std::size_t boundary =
      std::min(n, direct + static_cast<std::size_t>(std::llround(options.er_boundary_ms * 1e-3 * fs)));

  PerceptualParams p;
  p.sample_rate = fs;
  p.t60 = t60_schroeder(h_s);

  std::array<std::vector<double>, kAmbiChannels> late;
  double e_early = 0.0;
  double e_late = 0.0;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    p.h_er_norm[c].assign(boundary, 0.0);
    late[c].assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double r = h_s.channels[c][t] - lor.channels[c][t];
      if (t < boundary) {
        p.h_er_norm[c][t] = r;
        e_early += r * r;
      } else {
        late[c][t] = r;
        e_late += r * r;
      }
    }
  }
  p.g_er = std::sqrt(e_early);
  if (p.g_er < 1e-12) {
    p.g_er = 0.0;
    for (auto& ch : p.h_er_norm) std::fill(ch.begin(), ch.end(), 0.0);
  } else {
    for (auto& ch : p.h_er_norm) {
      for (double& v : ch) v /= p.g_er;
    }
  }
  p.g_lr = std::sqrt(e_late);

  // Band envelopes: RMS over channels of the band-passed late part, measured
  // in windows centred on the sample positions interp_envelope assigns to the
  // control points (point w sits at w (L - 1) / (E - 1)).
  const std::size_t span = late_length(p.t60, fs);
  const std::size_t windows = options.n_env_points;
  const double spacing = static_cast<double>(span - 1) / static_cast<double>(windows - 1);
  p.e_lr.assign(kNumBands, std::vector<double>(windows, 0.0));
  if (p.g_lr > 0.0) {
    for (std::size_t f = 0; f < kNumBands; ++f) {
      const auto sections = dsp::octave_band_filter(f, fs);
      std::vector<double> power(windows, 0.0);
      std::vector<std::size_t> counts(windows, 0);
      for (std::size_t c = 0; c < kAmbiChannels; ++c) {
        const auto y = dsp::filtfilt(sections, late[c]);
        for (std::size_t t = 0; t < span; ++t) {
          const auto w = static_cast<std::size_t>(std::llround(static_cast<double>(t) / spacing));
          power[w] += t < n ? y[t] * y[t] : 0.0;
          ++counts[w];
        }
      }
      for (std::size_t w = 0; w < windows; ++w) {
        p.e_lr[f][w] = counts[w] > 0 ? std::sqrt(power[w] / static_cast<double>(counts[w])) : 0.0;
      }
    }
    // Scale so that C * sum_f mean_w e^2 = 1, the expected energy of the
    // unnormalized late reverb built from unit-energy noise.
    double acc = 0.0;
    for (const auto& row : p.e_lr) {
      for (double v : row) acc += v * v;
    }
    acc *= static_cast<double>(kAmbiChannels) / static_cast<double>(windows);
    if (acc > 0.0) {
      const double scale = 1.0 / std::sqrt(acc);
      for (auto& row : p.e_lr) {
        for (double& v : row) v *= scale;
      }
    }
  }
  return p;
}

namespace {

// Rows: W, X, Y, Z. Columns follow the capsule order (+++), (+--), (-+-), (--+).
constexpr double kAtoB[4][4] = {
    {0.5, 0.5, 0.5, 0.5},
    {0.5, 0.5, -0.5, -0.5},
    {0.5, -0.5, 0.5, -0.5},
    {0.5, -0.5, -0.5, 0.5},
};

void require_canonical(const AmbisonicIR& ir) {
  const auto& canon = tetrahedral_capsules();
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    if (distance(ir.capsule_orientations[c], canon[c]) > 1e-9) {
      fail(ErrorCode::kUnsupported, "A-format conversion requires the canonical tetrahedral capsules");
    }
  }
}

AmbisonicIR mix(const AmbisonicIR& ir, bool transpose, AmbiFormat format) {
  AmbisonicIR out = AmbisonicIR::zeros(ir.length(), ir.sample_rate);
  out.format = format;
  for (std::size_t r = 0; r < kAmbiChannels; ++r) {
    for (std::size_t c = 0; c < kAmbiChannels; ++c) {
      const double m = transpose ? kAtoB[c][r] : kAtoB[r][c];
      const auto& src = ir.channels[c];
      auto& dst = out.channels[r];
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += m * src[t];
    }
  }
  return out;
}

}  // namespace

AmbisonicIR a_to_b_format(const AmbisonicIR& ir) {
  if (ir.format != AmbiFormat::kA) fail(ErrorCode::kUnsupported, "input is not A-format");
  require_canonical(ir);
  ir.validate();
  return mix(ir, false, AmbiFormat::kB);
}

AmbisonicIR b_to_a_format(const AmbisonicIR& ir) {
  if (ir.format != AmbiFormat::kB) fail(ErrorCode::kUnsupported, "input is not B-format");
  ir.validate();
  return mix(ir, true, AmbiFormat::kA);
}

nlohmann::json params_to_json(const PerceptualParams& params) {
  return nlohmann::json{{"format", "srirkit-params"},
                        {"version", 1},
                        {"t60", params.t60},
                        {"g_er", params.g_er},
                        {"g_lr", params.g_lr},
                        {"sample_rate", params.sample_rate},
                        {"er_length", params.er_length()},
                        {"e_lr", params.e_lr}};
}

PerceptualParams params_from_json(const nlohmann::json& doc) {
  try {
    PerceptualParams p;
    p.t60 = doc.at("t60").get<double>();
    p.g_er = doc.at("g_er").get<double>();
    p.g_lr = doc.at("g_lr").get<double>();
    p.sample_rate = doc.value("sample_rate", kDefaultSampleRate);
    p.e_lr = doc.at("e_lr").get<std::vector<std::vector<double>>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("parameter document: ") + e.what());
  }
}

void save_params(const PerceptualParams& params, const std::filesystem::path& json_path) {
  auto doc = params_to_json(params);
  std::filesystem::path wav = json_path;
  wav.replace_filename(json_path.stem().string() + "_er.wav");
  doc["h_er_norm"] = wav.filename().string();
  std::vector<std::vector<double>> channels(params.h_er_norm.begin(), params.h_er_norm.end());
  if (params.er_length() > 0) write_wav(wav, channels, params.sample_rate);
  std::ofstream out(json_path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed: " + json_path.string());
}

PerceptualParams load_params(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + json_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, json_path.string() + ": " + e.what());
  }
  PerceptualParams p = params_from_json(doc);
  const auto er_length = doc.value("er_length", std::size_t{0});
  if (er_length > 0) {
    const auto wav = json_path.parent_path() / doc.at("h_er_norm").get<std::string>();
    const WavData data = read_wav(wav);
    if (data.channels.size() != kAmbiChannels) fail(ErrorCode::kShape, wav.string() + ": expected 4 channels");
    for (std::size_t c = 0; c < kAmbiChannels; ++c) p.h_er_norm[c] = data.channels[c];
    // float32 storage: restore exact unit energy.
    double e = 0.0;
    for (const auto& ch : p.h_er_norm) e += sum_squares(ch);
    if (e > 0.0) {
      const double s = 1.0 / std::sqrt(e);
      for (auto& ch : p.h_er_norm) {
        for (double& v : ch) v *= s;
      }
    }
  }
  return p;
}

}  // namespace srir
