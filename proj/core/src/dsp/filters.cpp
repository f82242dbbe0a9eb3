#include "srir/dsp/filters.hpp"

#include <algorithm>
#include <cmath>

#include "srir/error.hpp"
#include "srir/types.hpp"

namespace srir::dsp {

std::complex<double> Biquad::response(double freq_hz, double sample_rate) const {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * kPi * freq_hz / sample_rate);
  const std::complex<double> z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

std::vector<Biquad> butterworth_bandpass(double low_hz, double high_hz, double sample_rate, int prototype_order) {
  const double nyquist = 0.5 * sample_rate;
  if (!(low_hz > 0.0 && low_hz < high_hz)) fail(ErrorCode::kDomain, "band-pass edges must satisfy 0 < low < high");
  if (!(high_hz < nyquist)) fail(ErrorCode::kDomain, "band edge above Nyquist");
  if (prototype_order < 1) fail(ErrorCode::kDomain, "prototype order must be >= 1");

  const double fs2 = 2.0 * sample_rate;
  const double w1 = fs2 * std::tan(kPi * low_hz / sample_rate);
  const double w2 = fs2 * std::tan(kPi * high_hz / sample_rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<Biquad> sections;
  const int n = prototype_order;
  for (int k = 0; k < n; ++k) {
    const std::complex<double> p = std::polar(1.0, kPi * (2.0 * k + n + 1.0) / (2.0 * n));
    const std::complex<double> pb = p * bw;
    const std::complex<double> disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const std::complex<double> s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      // One section per conjugate pair: keep the upper-half-plane pole.
      if (s.imag() <= 0.0) continue;
      const std::complex<double> z = (fs2 + s) / (fs2 - s);
      Biquad q;
      q.b0 = 1.0;
      q.b1 = 0.0;
      q.b2 = -1.0;
      q.a1 = -2.0 * z.real();
      q.a2 = std::norm(z);
      sections.push_back(q);
    }
  }
  // Normalize each section to unit gain at the (digital) centre frequency.
  const double centre = sample_rate / kPi * std::atan(std::sqrt(w0sq) / fs2);
  for (Biquad& q : sections) {
    const double g = std::abs(q.response(centre, sample_rate));
    q.b0 /= g;
    q.b2 /= g;
  }
  return sections;
}

std::vector<Biquad> octave_band_filter(std::size_t band, double sample_rate) {
  if (band >= kNumBands) fail(ErrorCode::kDomain, "band index out of range");
  return butterworth_bandpass(band_lower_edge(band), band_upper_edge(band), sample_rate, 2);
}

double magnitude(std::span<const Biquad> sections, double freq_hz, double sample_rate) {
  double m = 1.0;
  for (const Biquad& q : sections) m *= std::abs(q.response(freq_hz, sample_rate));
  return m;
}

void filter_in_place(std::span<const Biquad> sections, std::span<double> x) {
  for (const Biquad& q : sections) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  filter_in_place(sections, y);
  std::reverse(y.begin(), y.end());
  filter_in_place(sections, y);
  std::reverse(y.begin(), y.end());
  return y;
}

}  // namespace srir::dsp
