#include "srir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srir/error.hpp"

namespace srir {
namespace {

void require_same_shape(const AmbisonicIR& a, const AmbisonicIR& b) {
  if (a.length() != b.length()) {
    fail(ErrorCode::kShape,
         "IR lengths differ: " + std::to_string(a.length()) + " vs " + std::to_string(b.length()));
  }
  if (a.sample_rate != b.sample_rate) fail(ErrorCode::kShape, "IR sample rates differ");
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    if (a.channels[c].size() != a.length() || b.channels[c].size() != b.length()) {
      fail(ErrorCode::kShape, "ragged IR channels");
    }
  }
}

constexpr double kDbPerNeper = 20.0 / 2.302585092994045684;  // 20 / ln 10

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double mae_waveform(const AmbisonicIR& pred, const AmbisonicIR& target) {
  require_same_shape(pred, target);
  const std::size_t n = pred.length() * kAmbiChannels;
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    for (std::size_t t = 0; t < pred.length(); ++t) acc += std::abs(pred.channels[c][t] - target.channels[c][t]);
  }
  return acc / static_cast<double>(n);
}

double mse_waveform(const AmbisonicIR& pred, const AmbisonicIR& target) {
  require_same_shape(pred, target);
  const std::size_t n = pred.length() * kAmbiChannels;
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    for (std::size_t t = 0; t < pred.length(); ++t) {
      const double d = pred.channels[c][t] - target.channels[c][t];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(n);
}

double t60_schroeder(std::span<const double> x, double sample_rate) {
  const std::size_t n = x.size();
  std::vector<double> edc(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += x[i] * x[i];
    edc[i] = acc;
  }
  if (n == 0 || !(acc > 0.0)) fail(ErrorCode::kInsufficientDecay, "IR has no energy");
  const double total = acc;

  std::size_t start = n;
  std::size_t stop = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(edc[i] > 0.0)) break;
    const double db = 10.0 * std::log10(edc[i] / total);
    if (start == n && db <= -5.0) start = i;
    if (db <= -35.0) {
      stop = i;
      break;
    }
  }
  if (start == n || stop == n || stop <= start) {
    fail(ErrorCode::kInsufficientDecay, "energy decay curve does not reach -35 dB");
  }

  // Least-squares slope of dB against time over [start, stop].
  const double count = static_cast<double>(stop - start + 1);
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = start; i <= stop; ++i) {
    mean_t += static_cast<double>(i);
    mean_y += 10.0 * std::log10(edc[i] / total);
  }
  mean_t /= count;
  mean_y /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = start; i <= stop; ++i) {
    const double dt = static_cast<double>(i) - mean_t;
    sxy += dt * (10.0 * std::log10(edc[i] / total) - mean_y);
    sxx += dt * dt;
  }
  const double slope_per_sample = sxy / sxx;
  if (!(slope_per_sample < 0.0)) fail(ErrorCode::kInsufficientDecay, "non-decaying energy curve");
  return -60.0 / (slope_per_sample * sample_rate);
}

double t60_schroeder(const AmbisonicIR& ir) {
  const auto omni = ir.omni();
  return t60_schroeder(omni, ir.sample_rate);
}

double energy_db(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  if (!(e > 0.0)) fail(ErrorCode::kDomain, "energy of a silent signal");
  return 10.0 * std::log10(e);
}

double energy_db(const AmbisonicIR& ir) {
  const double e = ir.energy();
  if (!(e > 0.0)) fail(ErrorCode::kDomain, "energy of a silent signal");
  return 10.0 * std::log10(e);
}

double drr_db(std::span<const double> x, double sample_rate, double direct_window_ms) {
  if (x.empty()) fail(ErrorCode::kDomain, "DRR of an empty signal");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[peak])) peak = i;
  }
  if (!(std::abs(x[peak]) > 0.0)) fail(ErrorCode::kDomain, "DRR of a silent signal");
  const auto half = static_cast<std::size_t>(std::llround(0.5 * direct_window_ms * 1e-3 * sample_rate));
  const std::size_t lo = peak > half ? peak - half : 0;
  const std::size_t hi = std::min(x.size() - 1, peak + half);
  double direct = 0.0;
  double rest = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] * x[i];
    (i >= lo && i <= hi ? direct : rest) += e;
  }
  if (!(rest > 0.0)) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(direct / rest);
}

double drr_db(const AmbisonicIR& ir, double direct_window_ms) {
  const auto omni = ir.omni();
  return drr_db(omni, ir.sample_rate, direct_window_ms);
}

dsp::Matrix mel_spectrogram(const AmbisonicIR& ir, const MelConfig& cfg) {
  MelConfig c = cfg;
  c.sample_rate = ir.sample_rate;
  const dsp::MelAnalyzer mel(c);
  dsp::Matrix avg;
  for (std::size_t ch = 0; ch < kAmbiChannels; ++ch) {
    const dsp::Matrix m = mel.log_mel(ir.channels[ch]);
    if (ch == 0) {
      avg = m;
    } else {
      for (std::size_t i = 0; i < m.data.size(); ++i) avg.data[i] += m.data[i];
    }
  }
  for (double& v : avg.data) v /= static_cast<double>(kAmbiChannels);
  return avg;
}

double mel_distance(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& cfg) {
  require_same_shape(pred, target);
  const dsp::Matrix a = mel_spectrogram(pred, cfg);
  const dsp::Matrix b = mel_spectrogram(target, cfg);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
  return kDbPerNeper * acc / static_cast<double>(a.data.size());
}

nlohmann::json MetricReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return nlohmann::json{{"MAE", num(mae)}, {"T60", num(t60)}, {"En.", num(energy)},
                        {"DRR", num(drr)}, {"Mel", num(mel)},  {"Mel-T", num(mel_t)}};
}

MetricReport compare(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& spectral,
                     const MelConfig& temporal) {
  if (pred.sample_rate != target.sample_rate) fail(ErrorCode::kShape, "IR sample rates differ");
  const std::size_t n = std::max({pred.length(), target.length(), spectral.n_fft, temporal.n_fft});
  const AmbisonicIR p = pred.padded_to(n);
  const AmbisonicIR t = target.padded_to(n);

  MetricReport r;
  r.mae = mae_waveform(p, t);
  try {
    r.t60 = std::abs(t60_schroeder(p) - t60_schroeder(t));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientDecay) throw;
    r.t60 = nan();
  }
  r.energy = std::abs(energy_db(p) - energy_db(t));
  const double dp = drr_db(p);
  const double dt = drr_db(t);
  r.drr = (std::isfinite(dp) && std::isfinite(dt)) ? std::abs(dp - dt) : (dp == dt ? 0.0 : nan());
  r.mel = mel_distance(p, t, spectral);
  r.mel_t = mel_distance(p, t, temporal);
  return r;
}

void LossWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) fail(ErrorCode::kConfig, "loss weights must be non-negative");
  if (!(alpha > 0.0 || beta > 0.0 || gamma > 0.0)) fail(ErrorCode::kConfig, "at least one loss weight must be positive");
}

double loss_ic(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> target, bool cyclic) {
  const std::size_t channels = pred.size();
  if (channels != target.size() || channels < 2) fail(ErrorCode::kShape, "inter-channel loss needs >= 2 matching channels");
  const std::size_t len = pred[0].size();
  for (std::size_t c = 0; c < channels; ++c) {
    if (pred[c].size() != len || target[c].size() != len) fail(ErrorCode::kShape, "inter-channel loss shape mismatch");
  }
  if (len == 0) return 0.0;
  const std::size_t pairs = cyclic ? channels : channels - 1;
  double acc = 0.0;
  for (std::size_t c = 0; c < pairs; ++c) {
    const std::size_t d = (c + 1) % channels;
    for (std::size_t t = 0; t < len; ++t) {
      const double diff = (pred[c][t] - pred[d][t]) - (target[c][t] - target[d][t]);
      acc += diff * diff;
    }
  }
  return acc / static_cast<double>(channels * len);
}

double loss_ic(const AmbisonicIR& pred, const AmbisonicIR& target, bool cyclic) {
  require_same_shape(pred, target);
  return loss_ic(std::span<const std::vector<double>>(pred.channels), std::span<const std::vector<double>>(target.channels),
                 cyclic);
}

namespace {

// Per-channel log-mel MSE; adds scale * gradient into grad when given.
double mel_term(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& cfg, double scale,
                AmbisonicIR* grad) {
  MelConfig c = cfg;
  c.sample_rate = pred.sample_rate;
  const dsp::MelAnalyzer mel(c);
  std::vector<dsp::Matrix> lp(kAmbiChannels);
  std::vector<dsp::Matrix> lt(kAmbiChannels);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t ch = 0; ch < kAmbiChannels; ++ch) {
    lp[ch] = mel.log_mel(pred.channels[ch]);
    lt[ch] = mel.log_mel(target.channels[ch]);
    for (std::size_t i = 0; i < lp[ch].data.size(); ++i) {
      const double d = lp[ch].data[i] - lt[ch].data[i];
      acc += d * d;
    }
    count += lp[ch].data.size();
  }
  const double loss = acc / static_cast<double>(count);
  if (grad != nullptr && scale != 0.0) {
    for (std::size_t ch = 0; ch < kAmbiChannels; ++ch) {
      dsp::Matrix g(lp[ch].rows, lp[ch].cols);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        g.data[i] = scale * 2.0 * (lp[ch].data[i] - lt[ch].data[i]) / static_cast<double>(count);
      }
      mel.log_mel_backward(pred.channels[ch], g, grad->channels[ch]);
    }
  }
  return loss;
}

}  // namespace

double loss_mel(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& cfg) {
  require_same_shape(pred, target);
  return mel_term(pred, target, cfg, 0.0, nullptr);
}

LossBreakdown loss_total(const AmbisonicIR& pred, const AmbisonicIR& target, const LossWeights& weights,
                         const MelConfig& cfg1, const MelConfig& cfg2, AmbisonicIR* grad) {
  weights.validate();
  require_same_shape(pred, target);
  const std::size_t len = pred.length();
  if (grad != nullptr) *grad = AmbisonicIR::zeros(len, pred.sample_rate);

  LossBreakdown out;
  out.mel1 = mel_term(pred, target, cfg1, weights.alpha, grad);
  out.mel2 = mel_term(pred, target, cfg2, weights.alpha, grad);
  out.waveform = mse_waveform(pred, target);
  out.ic = loss_ic(pred, target, true);
  out.total = weights.alpha * (out.mel1 + out.mel2) + weights.beta * out.waveform + weights.gamma * out.ic;

  if (grad != nullptr && len > 0) {
    const double n = static_cast<double>(kAmbiChannels * len);
    for (std::size_t c = 0; c < kAmbiChannels; ++c) {
      const std::size_t next = (c + 1) % kAmbiChannels;
      const std::size_t prev = (c + kAmbiChannels - 1) % kAmbiChannels;
      for (std::size_t t = 0; t < len; ++t) {
        const double diff = pred.channels[c][t] - target.channels[c][t];
        const double dc = diff - (pred.channels[next][t] - target.channels[next][t]);
        const double dprev = (pred.channels[prev][t] - target.channels[prev][t]) - diff;
        grad->channels[c][t] += weights.beta * 2.0 * diff / n + weights.gamma * 2.0 * (dc - dprev) / n;
      }
    }
  }
  return out;
}

}  // namespace srir
