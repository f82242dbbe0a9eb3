#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srir/ambisonic_ir.hpp"
#include "srir/dsp/mel.hpp"

namespace srir {

using dsp::MelConfig;

// --- objective metrics ----------------------------------------------------

/// Mean |pred - target| over all channels and samples. Throws kShape unless
/// both IRs have the same length and sample rate.
double mae_waveform(const AmbisonicIR& pred, const AmbisonicIR& target);
/// Mean (pred - target)^2 over all channels and samples.
double mse_waveform(const AmbisonicIR& pred, const AmbisonicIR& target);

/// Reverberation time from the Schroeder energy decay curve: least-squares
/// line through the -5..-35 dB segment, T60 = -60 / slope. Throws
/// kInsufficientDecay if the curve never reaches -35 dB with at least two
/// points in the fit range.
double t60_schroeder(std::span<const double> x, double sample_rate);
/// Same, on the channel-mean proxy.
double t60_schroeder(const AmbisonicIR& ir);

/// 10 log10 of the summed squared samples. Throws kDomain for silence.
double energy_db(std::span<const double> x);
double energy_db(const AmbisonicIR& ir);

/// Direct-to-reverberant ratio on the channel-mean proxy. The direct part is
/// the window of total width `direct_window_ms` centred on the absolute
/// peak. Returns +infinity when nothing lies outside the window; throws
/// kDomain for silence.
double drr_db(std::span<const double> x, double sample_rate, double direct_window_ms = 2.5);
double drr_db(const AmbisonicIR& ir, double direct_window_ms = 2.5);

/// Channel-averaged log-mel spectrogram (frames x n_mels).
dsp::Matrix mel_spectrogram(const AmbisonicIR& ir, const MelConfig& cfg);

/// Mean absolute log-mel difference between the channel-averaged
/// spectrograms, expressed in dB of magnitude (20/ln 10 per natural-log unit).
double mel_distance(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& cfg);

/// Error report with the column names used by the evaluation tables.
struct MetricReport {
  double mae = 0.0;
  double t60 = 0.0;  // |T60 difference|, seconds; NaN if either decay is too short
  double energy = 0.0;  // |energy difference|, dB
  double drr = 0.0;  // |DRR difference|, dB; NaN if undefined
  double mel = 0.0;
  double mel_t = 0.0;

  nlohmann::json to_json() const;
};

/// Zero-pads the shorter IR, then evaluates every metric.
MetricReport compare(const AmbisonicIR& pred, const AmbisonicIR& target,
                     const MelConfig& spectral = MelConfig::spectral(),
                     const MelConfig& temporal = MelConfig::temporal());

// --- training losses --------------------------------------------------------

struct LossWeights {
  double alpha = 1.0;  // mel terms
  double beta = 1.0;   // waveform MSE
  double gamma = 1.0;  // inter-channel term

  /// Throws kConfig on negative weights or all-zero weights.
  void validate() const;
};

struct LossBreakdown {
  double mel1 = 0.0;
  double mel2 = 0.0;
  double waveform = 0.0;
  double ic = 0.0;
  double total = 0.0;
};

/// Inter-channel difference loss: mean over channels c and samples t of
/// ((p_c - p_{c+1}) - (t_c - t_{c+1}))^2. With `cyclic` the channel after
/// the last one is the first (C terms); otherwise C-1 pairs are used.
double loss_ic(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> target,
               bool cyclic = true);
double loss_ic(const AmbisonicIR& pred, const AmbisonicIR& target, bool cyclic = true);

/// Mean squared difference of per-channel log-mel matrices.
double loss_mel(const AmbisonicIR& pred, const AmbisonicIR& target, const MelConfig& cfg);

/// alpha (mel1 + mel2) + beta MSE + gamma IC. When `grad` is non-null it
/// receives d(total)/d(pred), shaped like pred.
LossBreakdown loss_total(const AmbisonicIR& pred, const AmbisonicIR& target, const LossWeights& weights,
                         const MelConfig& cfg1 = MelConfig::spectral(),
                         const MelConfig& cfg2 = MelConfig::temporal(), AmbisonicIR* grad = nullptr);

}  // namespace srir
