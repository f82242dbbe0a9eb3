#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "srir/ambisonic_ir.hpp"

namespace srir {

inline constexpr std::size_t kEnvelopePoints = 32;
inline constexpr double kEarlyLateBoundaryMs = 80.0;
inline constexpr double kMinLateSeconds = 0.010;

/// Perceptual description of an SRIR beyond its low-order part.
struct PerceptualParams {
  double t60 = 0.0;  // seconds
  double g_er = 0.0;
  double g_lr = 0.0;
  /// Unit-energy (over all channels) early-reflection waveform, or all zero.
  std::array<std::vector<double>, kAmbiChannels> h_er_norm{};
  /// kNumBands rows of envelope control points.
  std::vector<std::vector<double>> e_lr;
  double sample_rate = kDefaultSampleRate;

  std::size_t er_length() const { return h_er_norm[0].size(); }
  /// Throws kDomain / kShape on negative values, ragged data or an early
  /// part whose energy is neither 0 nor 1 (to 1e-6).
  void validate() const;
};

/// Zero-mean uniform noise, band-passed to octave `band` with the zero-phase
/// 4th-order filter and scaled to unit energy. Deterministic in
/// (band, length, sample_rate, seed).
std::vector<double> bandlimited_noise(std::size_t band, std::size_t length, double sample_rate, std::uint64_t seed);

/// Linear resampling of E >= 2 control points onto `target_length` evenly
/// spaced samples; first and last points are reproduced exactly.
std::vector<double> interp_envelope(std::span<const double> envelope, std::size_t target_length);

/// Number of samples spanned by the late reverb for a given T60.
std::size_t late_length(double t60, double sample_rate);

/// sum_f Interp(e_f, L) n_f per channel (channel c seeded with seed ^ c),
/// jointly scaled to unit energy. All-zero when the envelopes are.
std::array<std::vector<double>, kAmbiChannels> late_reverb(const std::vector<std::vector<double>>& e_lr,
                                                           std::size_t length, double sample_rate,
                                                           std::uint64_t seed);

/// h_S = g_er h'_ER + h_LoR + g_lr h'_LR, zero-padded to
/// max(late_length(t60), len(h_lor), er_length).
AmbisonicIR synthesize(const PerceptualParams& params, const AmbisonicIR& h_lor, std::uint64_t seed);

struct ExtractOptions {
  double er_boundary_ms = kEarlyLateBoundaryMs;
  std::size_t n_env_points = kEnvelopePoints;
};

/// Inverse of synthesize on a measured or simulated SRIR. The boundary is
/// measured from the direct arrival (absolute peak of the channel mean of
/// h_lor, or of h_s when h_lor is silent).
PerceptualParams extract_params(const AmbisonicIR& h_s, const AmbisonicIR& h_lor, const ExtractOptions& options = {});

/// Sample index of the direct arrival used by extract_params.
std::size_t direct_arrival_index(const AmbisonicIR& h_s, const AmbisonicIR& h_lor);

/// W = sum/2; X, Y, Z = signed half-sums following the capsule signs. The
/// matrix is orthogonal, so b_to_a_format is its transpose.
AmbisonicIR a_to_b_format(const AmbisonicIR& ir);
AmbisonicIR b_to_a_format(const AmbisonicIR& ir);

// --- serialization ----------------------------------------------------------

/// Scalars and envelopes; h_er_norm is stored separately as a WAV.
nlohmann::json params_to_json(const PerceptualParams& params);
/// Reads the scalar/envelope fields; h_er_norm is left empty.
PerceptualParams params_from_json(const nlohmann::json& doc);

/// `<stem>.json` plus `<stem>_er.wav`; the JSON names the WAV.
void save_params(const PerceptualParams& params, const std::filesystem::path& json_path);
PerceptualParams load_params(const std::filesystem::path& json_path);

}  // namespace srir
