#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles/oracles.hpp"
#include "srir/dsp/fft.hpp"
#include "srir/error.hpp"
#include "srir/dsp/filters.hpp"
#include "srir/dsp/mel.hpp"

using namespace srir;
using namespace srir::dsp;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

struct FrozenResponse {
  double freq;
  double magnitude;
};

}  // namespace

TEST(Fft, MatchesDirectDft) {
  const auto x = noise(256, 1);
  const auto& fft = RealFft::get(256);
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    long double re = 0, im = 0;
    for (std::size_t n = 0; n < 256; ++n) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * k * n / 256;
      re += x[n] * std::cos(ang);
      im += x[n] * std::sin(ang);
    }
    EXPECT_NEAR(spec[k].real(), static_cast<double>(re), 1e-10);
    EXPECT_NEAR(spec[k].imag(), static_cast<double>(im), 1e-10);
  }
  std::vector<double> back(256);
  fft.inverse(spec, back);
  for (std::size_t n = 0; n < 256; ++n) EXPECT_NEAR(back[n] / 256.0, x[n], 1e-12);
}

TEST(Fft, ConvolutionMatchesDirectSum) {
  const auto a = noise(300, 2);
  const auto b = noise(77, 3);
  const auto c = fft_convolve(a, b);
  ASSERT_EQ(c.size(), a.size() + b.size() - 1);
  for (std::size_t n = 0; n < c.size(); ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (n >= k && n - k < a.size()) s += a[n - k] * b[k];
    }
    EXPECT_NEAR(c[n], s, 1e-10);
  }
}

TEST(Stft, MatchesDirectDftMagnitudes) {
  const auto x = noise(700, 4);
  const auto m = stft_magnitude(x, 256, 64);
  const auto ref = oracle::dft_magnitude(x, 256, 64);
  ASSERT_EQ(m.rows, ref.size());
  for (std::size_t t = 0; t < m.rows; ++t) {
    for (std::size_t k = 0; k < m.cols; ++k) EXPECT_NEAR(m(t, k), static_cast<double>(ref[t][k]), 1e-10);
  }
}

TEST(Stft, ParsevalForUnitImpulse) {
  const std::size_t n_fft = 1024;
  const auto w = hann_window(n_fft);
  for (std::size_t pos : {100u, 512u, 900u}) {
    std::vector<double> x(n_fft, 0.0);
    x[pos] = 1.0;
    const auto m = stft_magnitude(x, n_fft, 256);
    double spec = 0.0;
    for (std::size_t k = 0; k < m.cols; ++k) {
      const double weight = (k == 0 || k == m.cols - 1) ? 1.0 : 2.0;
      spec += weight * m(0, k) * m(0, k);
    }
    // Windowed time-domain energy times N (unnormalized transform).
    EXPECT_NEAR(spec, static_cast<double>(n_fft) * w[pos] * w[pos], 1e-9);
  }
}

TEST(Mel, FilterbankMatchesQuadrature) {
  const MelConfig cfg = MelConfig::temporal();
  const auto fb = mel_filterbank(cfg);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    double row = 0.0;
    for (std::size_t k = 0; k < cfg.bins(); ++k) {
      EXPECT_NEAR(fb(m, k), oracle::mel_weight_quadrature(m, k, cfg.n_mels, cfg.n_fft, cfg.sample_rate, 4000), 1e-6);
      row += fb(m, k);
    }
    EXPECT_GT(row, 0.0);
  }
  const MelConfig big = MelConfig::spectral();
  const auto fb2 = mel_filterbank(big);
  for (std::size_t m : {0u, 1u, 2u, 40u, 79u}) {
    for (std::size_t k = 0; k < big.bins(); ++k) {
      EXPECT_NEAR(fb2(m, k), oracle::mel_weight_quadrature(m, k, big.n_mels, big.n_fft, big.sample_rate, 2000), 1e-6);
    }
  }
  for (std::size_t m = 0; m < big.n_mels; ++m) {
    double row = 0.0;
    for (std::size_t k = 0; k < big.bins(); ++k) row += fb2(m, k);
    EXPECT_GT(row, 0.0) << "row " << m;
  }
}

TEST(Mel, SilenceGivesLogFloor) {
  const std::vector<double> x(2048, 0.0);
  for (const auto& cfg : {MelConfig::spectral(), MelConfig::temporal()}) {
    const auto m = log_mel(x, cfg);
    EXPECT_EQ(m.rows, cfg.frames(x.size()));
    for (double v : m.data) EXPECT_DOUBLE_EQ(v, std::log(cfg.log_floor));
  }
}

TEST(Mel, ToneLandsInItsFilter) {
  std::vector<double> x(4096);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * kPi * 1000.0 * static_cast<double>(i) / 48000.0);
  for (const auto& cfg : {MelConfig::spectral(), MelConfig::temporal()}) {
    const auto fb = mel_filterbank(cfg);
    const auto bin = static_cast<std::size_t>(std::lround(1000.0 * static_cast<double>(cfg.n_fft) / cfg.sample_rate));
    std::size_t expected = 0;
    for (std::size_t m = 1; m < cfg.n_mels; ++m) {
      if (fb(m, bin) > fb(expected, bin)) expected = m;
    }
    const auto lm = log_mel(x, cfg);
    std::vector<double> avg(cfg.n_mels, 0.0);
    for (std::size_t t = 0; t < lm.rows; ++t) {
      for (std::size_t m = 0; m < cfg.n_mels; ++m) avg[m] += lm(t, m);
    }
    const auto got = static_cast<std::size_t>(std::max_element(avg.begin(), avg.end()) - avg.begin());
    EXPECT_EQ(got, expected) << "n_fft " << cfg.n_fft;
  }
}

TEST(Mel, ShortInputIsShapeError) {
  const std::vector<double> x(100, 0.0);
  EXPECT_THROW(log_mel(x, MelConfig::temporal()), Error);
}

TEST(Mel, ConfigValidation) {
  MelConfig c = MelConfig::temporal();
  c.hop = c.n_fft + 1;
  EXPECT_THROW(c.validate(), Error);
  c = MelConfig::temporal();
  c.n_mels = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Filters, OctaveBandsMatchFrozenButterworthResponses) {
  // Reference magnitudes of the 4th-order digital Butterworth band-pass
  // (bilinear transform, edges fc / sqrt 2 .. fc sqrt 2) at 48 kHz.
  const std::vector<std::pair<std::size_t, std::vector<FrozenResponse>>> frozen = {
      {0,
       {{15.625, 0.0355334601703571},
        {44.194173824159215, 0.707106781184355},
        {62.5, 1.00000000000015},
        {88.38834764831844, 0.707106781185949},
        {250.0, 0.035527375152044}}},
      {3,
       {{125.0, 0.0355560200668749},
        {353.5533905932737, 0.707106781186543},
        {500.0, 1.00000000000007},
        {707.1067811865476, 0.707106781186542},
        {2000.0, 0.0351669252303615}}},
      {7,
       {{2000.0, 0.0420567478100881},
        {5656.8542494923795, 0.707106781186548},
        {8000.0, 0.999987620891267},
        {11313.70849898476, 0.707106781186547},
        {20000.0, 0.020898375061364}}},
  };
  for (const auto& [band, points] : frozen) {
    const auto sections = octave_band_filter(band, 48000.0);
    for (const auto& p : points) {
      EXPECT_NEAR(magnitude(sections, p.freq, 48000.0), p.magnitude, 1e-9) << "band " << band << " at " << p.freq;
    }
  }
}

TEST(Filters, FiltfiltIsZeroPhase) {
  const auto sections = octave_band_filter(4, 48000.0);
  std::vector<double> x(40001, 0.0);
  x[20000] = 1.0;
  const auto y = filtfilt(sections, x);
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  for (std::size_t k = 1; k < 5000; ++k) EXPECT_NEAR(y[20000 + k], y[20000 - k], 1e-9 * peak);
  EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(), 20000);
}
