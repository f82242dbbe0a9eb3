#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srir/types.hpp"

namespace srir::dsp {

/// One mel-spectrogram resolution.
struct MelConfig {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 80;
  double sample_rate = kDefaultSampleRate;
  double log_floor = 1e-5;

  /// High spectral resolution ("Mel" column).
  static MelConfig spectral() { return {1024, 256, 80, kDefaultSampleRate, 1e-5}; }
  /// High temporal resolution ("Mel-T" column).
  static MelConfig temporal() { return {256, 64, 32, kDefaultSampleRate, 1e-5}; }

  /// Throws kConfig on hop > n_fft, n_mels == 0, odd/tiny n_fft or
  /// non-positive log floor.
  void validate() const;
  std::size_t bins() const { return n_fft / 2 + 1; }
  std::size_t frames(std::size_t length) const { return length < n_fft ? 0 : 1 + (length - n_fft) / hop; }
};

/// Row-major frames x columns matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

/// Triangular mel filters (HTK scale, 0 Hz .. Nyquist, peak 1) averaged over
/// each FFT bin's frequency cell, so every filter has positive total weight
/// even when it is narrower than a bin. n_mels x bins.
Matrix mel_filterbank(const MelConfig& cfg);

/// |STFT| with a periodic Hann window, no centring: frames x bins.
Matrix stft_magnitude(std::span<const double> x, std::size_t n_fft, std::size_t hop);

/// log(mel(|STFT|) + log_floor): frames x n_mels. Throws kShape when the
/// input is shorter than n_fft.
Matrix log_mel(std::span<const double> x, const MelConfig& cfg);

/// Cached filterbank + window for repeated use with one config.
class MelAnalyzer {
 public:
  explicit MelAnalyzer(const MelConfig& cfg);

  const MelConfig& config() const { return cfg_; }
  const Matrix& filterbank() const { return fb_; }
  const std::vector<double>& window() const { return window_; }

  Matrix log_mel(std::span<const double> x) const;

  /// Given dL/d(log-mel) (frames x n_mels), accumulates dL/dx into `grad_x`.
  void log_mel_backward(std::span<const double> x, const Matrix& grad_out, std::span<double> grad_x) const;

 private:
  MelConfig cfg_;
  Matrix fb_;
  std::vector<double> window_;
};

}  // namespace srir::dsp
