#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace srir::dsp {

/// Real-input FFT of a fixed size backed by FFTW. Instances are shared from a
/// process-wide cache (planning is serialized internally); `forward` and
/// `inverse` are safe to call concurrently.
class RealFft {
 public:
  static const RealFft& get(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// out[k] = sum_n in[n] e^{-2 pi i k n / N}, k = 0..N/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse of a Hermitian half spectrum:
  /// out[n] = sum_{k=0}^{N-1} X[k] e^{+2 pi i k n / N}.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft();

 private:
  explicit RealFft(std::size_t n);

  std::size_t n_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Power spectrum |X_k|^2 of a real signal zero-padded to the next power of two.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t& fft_size);

/// Linear convolution via FFT.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace srir::dsp
