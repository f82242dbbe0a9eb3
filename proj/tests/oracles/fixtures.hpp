#pragma once
// Random signal fixtures shared by the metric tests and the acceptance run.

#include <cmath>
#include <random>
#include <vector>

#include "srir/ambisonic_ir.hpp"

namespace fixture {

/// Rounds to a multiple of 2^-24. Sums and differences of such values stay
/// exact in double precision while their magnitude is below 2^28.
inline double dyadic(double v) { return std::round(std::ldexp(v, 24)) * std::ldexp(1.0, -24); }

/// Direct impulse at a random early sample, then exponentially decaying
/// noise with a random T60 in [10, 30] ms, independently per channel.
/// Samples are dyadic, see above.
inline srir::AmbisonicIR decaying_ir(std::uint64_t seed, std::size_t length = 1536) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double fs = srir::kDefaultSampleRate;
  const double t60 = 0.010 + 0.020 * u(rng);
  const auto direct = static_cast<std::size_t>(20 + 80 * u(rng));
  const double gain = 0.2 + u(rng);
  auto ir = srir::AmbisonicIR::zeros(length, fs);
  for (std::size_t c = 0; c < 4; ++c) {
    auto& ch = ir.channels[c];
    ch[direct] = dyadic(gain * (0.5 + 0.5 * u(rng)));
    for (std::size_t t = direct + 1; t < length; ++t) {
      const double age = static_cast<double>(t - direct) / fs;
      ch[t] = dyadic(0.1 * gain * n(rng) * std::pow(10.0, -3.0 * age / t60));
    }
  }
  return ir;
}

/// Dyadic white noise, one sample per time step, for common-mode tests.
inline std::vector<double> dyadic_noise(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(length);
  for (double& v : w) v = dyadic(n(rng));
  return w;
}

}  // namespace fixture
