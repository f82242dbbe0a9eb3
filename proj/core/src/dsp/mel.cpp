#include "srir/dsp/mel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "srir/dsp/fft.hpp"
#include "srir/error.hpp"

namespace srir::dsp {

void MelConfig::validate() const {
  if (n_fft < 4 || n_fft % 2 != 0) fail(ErrorCode::kConfig, "mel n_fft must be even and >= 4");
  if (hop == 0 || hop > n_fft) fail(ErrorCode::kConfig, "mel hop must be in [1, n_fft]");
  if (n_mels == 0) fail(ErrorCode::kConfig, "mel n_mels must be >= 1");
  if (!(log_floor > 0.0)) fail(ErrorCode::kConfig, "mel log_floor must be positive");
  if (!(sample_rate > 0.0)) fail(ErrorCode::kConfig, "mel sample_rate must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

namespace {

// Integral over [lo, hi] of the triangle rising on [a, c] and falling on [c, b].
double triangle_integral(double a, double c, double b, double lo, double hi) {
  double total = 0.0;
  const double l1 = std::max(lo, a);
  const double u1 = std::min(hi, c);
  if (u1 > l1) total += ((u1 - a) * (u1 - a) - (l1 - a) * (l1 - a)) / (2.0 * (c - a));
  const double l2 = std::max(lo, c);
  const double u2 = std::min(hi, b);
  if (u2 > l2) total += ((b - l2) * (b - l2) - (b - u2) * (b - u2)) / (2.0 * (b - c));
  return total;
}

}  // namespace

Matrix mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const std::size_t bins = cfg.bins();
  const double nyquist = 0.5 * cfg.sample_rate;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  const double df = cfg.sample_rate / static_cast<double>(cfg.n_fft);
  Matrix fb(cfg.n_mels, bins);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double centre = df * static_cast<double>(k);
      fb(m, k) = triangle_integral(edges[m], edges[m + 1], edges[m + 2], centre - 0.5 * df, centre + 0.5 * df) / df;
    }
  }
  return fb;
}

Matrix stft_magnitude(std::span<const double> x, std::size_t n_fft, std::size_t hop) {
  if (x.size() < n_fft) fail(ErrorCode::kShape, "signal shorter than n_fft");
  const auto& fft = RealFft::get(n_fft);
  const auto window = hann_window(n_fft);
  const std::size_t frames = 1 + (x.size() - n_fft) / hop;
  Matrix out(frames, fft.bins());
  std::vector<double> buf(n_fft);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < n_fft; ++n) buf[n] = x[t * hop + n] * window[n];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) out(t, k) = std::abs(spec[k]);
  }
  return out;
}

MelAnalyzer::MelAnalyzer(const MelConfig& cfg) : cfg_(cfg), fb_(mel_filterbank(cfg)), window_(hann_window(cfg.n_fft)) {}

Matrix MelAnalyzer::log_mel(std::span<const double> x) const {
  if (x.size() < cfg_.n_fft) {
    fail(ErrorCode::kShape, "signal of " + std::to_string(x.size()) + " samples shorter than n_fft " +
                                std::to_string(cfg_.n_fft));
  }
  const Matrix mag = stft_magnitude(x, cfg_.n_fft, cfg_.hop);
  Matrix out(mag.rows, cfg_.n_mels);
  for (std::size_t t = 0; t < mag.rows; ++t) {
    for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < mag.cols; ++k) acc += fb_(m, k) * mag(t, k);
      out(t, m) = std::log(acc + cfg_.log_floor);
    }
  }
  return out;
}

void MelAnalyzer::log_mel_backward(std::span<const double> x, const Matrix& grad_out, std::span<double> grad_x) const {
  const std::size_t n_fft = cfg_.n_fft;
  const auto& fft = RealFft::get(n_fft);
  const std::size_t frames = cfg_.frames(x.size());
  if (grad_out.rows != frames || grad_out.cols != cfg_.n_mels || grad_x.size() != x.size()) {
    fail(ErrorCode::kShape, "log-mel gradient shape mismatch");
  }
  std::vector<double> buf(n_fft);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> mag(fft.bins());
  std::vector<double> grad_mag(fft.bins());
  std::vector<std::complex<double>> coeff(fft.bins());
  std::vector<double> grad_frame(n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < n_fft; ++n) buf[n] = x[t * cfg_.hop + n] * window_[n];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
    std::fill(grad_mag.begin(), grad_mag.end(), 0.0);
    for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
      double mel = 0.0;
      for (std::size_t k = 0; k < mag.size(); ++k) mel += fb_(m, k) * mag[k];
      const double g = grad_out(t, m) / (mel + cfg_.log_floor);
      for (std::size_t k = 0; k < mag.size(); ++k) grad_mag[k] += fb_(m, k) * g;
    }
    // d|X_k|/dframe_n = Re(X_k e^{+i theta_kn}) / |X_k|; summed over the one-sided
    // spectrum this is a Hermitian inverse transform with interior bins halved.
    for (std::size_t k = 0; k < spec.size(); ++k) {
      coeff[k] = mag[k] > 0.0 ? spec[k] * (grad_mag[k] / mag[k]) : std::complex<double>(0.0, 0.0);
      if (k != 0 && k != spec.size() - 1) coeff[k] *= 0.5;
    }
    fft.inverse(coeff, grad_frame);
    for (std::size_t n = 0; n < n_fft; ++n) grad_x[t * cfg_.hop + n] += window_[n] * grad_frame[n];
  }
}

Matrix log_mel(std::span<const double> x, const MelConfig& cfg) { return MelAnalyzer(cfg).log_mel(x); }

}  // namespace srir::dsp
