#pragma once

#include <complex>
#include <span>
#include <vector>

namespace srir::dsp {

/// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double freq_hz, double sample_rate) const;
};

/// Digital Butterworth band-pass via the bilinear transform. `prototype_order`
/// is the order of the analog low-pass prototype; the result has that many
/// biquads (filter order 2 * prototype_order). Unit gain at the geometric
/// centre frequency.
std::vector<Biquad> butterworth_bandpass(double low_hz, double high_hz, double sample_rate, int prototype_order = 2);

/// The octave band `band` of the shared filterbank: 4th-order band-pass.
std::vector<Biquad> octave_band_filter(std::size_t band, double sample_rate);

/// Cascade magnitude response.
double magnitude(std::span<const Biquad> sections, double freq_hz, double sample_rate);

/// Causal cascade filtering (transposed direct form II, zero initial state).
void filter_in_place(std::span<const Biquad> sections, std::span<double> x);

/// Zero-phase filtering: forward pass then time-reversed pass.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x);

}  // namespace srir::dsp
