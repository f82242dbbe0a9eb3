#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "srir/types.hpp"

namespace srir {

inline constexpr std::size_t kAmbiChannels = 4;

enum class AmbiFormat { kA, kB };

/// Unit vectors towards (1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1); this is
/// also the A-format channel order.
const std::array<Vec3, kAmbiChannels>& tetrahedral_capsules();

/// Four-channel sampled impulse response (first-order Ambisonics).
struct AmbisonicIR {
  std::array<std::vector<double>, kAmbiChannels> channels{};
  double sample_rate = kDefaultSampleRate;
  AmbiFormat format = AmbiFormat::kA;
  std::array<Vec3, kAmbiChannels> capsule_orientations = tetrahedral_capsules();

  static AmbisonicIR zeros(std::size_t length, double sample_rate = kDefaultSampleRate);

  std::size_t length() const { return channels[0].size(); }
  /// Zero-pads (or truncates) every channel to `n` samples.
  void resize(std::size_t n);
  AmbisonicIR padded_to(std::size_t n) const;

  /// Sum of squares over all channels and samples.
  double energy() const;
  /// Channel mean, the omnidirectional proxy used for T60 and DRR.
  std::vector<double> omni() const;

  bool all_finite() const;
  /// Throws kShape/kNumerical when channel lengths differ or samples are not finite.
  void validate() const;
};

/// Optional provenance written next to an IR WAV.
struct IrSidecar {
  AmbiFormat format = AmbiFormat::kA;
  double sample_rate = kDefaultSampleRate;
  std::array<Vec3, kAmbiChannels> capsule_orientations = tetrahedral_capsules();
  std::optional<Vec3> source;
  std::optional<Vec3> listener;
  std::optional<int> lor_order;
};

nlohmann::json sidecar_to_json(const IrSidecar& sidecar);
IrSidecar sidecar_from_json(const nlohmann::json& doc);
IrSidecar sidecar_for(const AmbisonicIR& ir);

// --- WAV ---------------------------------------------------------------

struct WavData {
  std::vector<std::vector<double>> channels;
  double sample_rate = kDefaultSampleRate;
};

/// Writes interleaved 32-bit IEEE float WAV.
void write_wav(const std::filesystem::path& path, const std::vector<std::vector<double>>& channels,
               double sample_rate);
/// Reads 16/24/32-bit PCM or 32/64-bit float WAV.
WavData read_wav(const std::filesystem::path& path);

/// `<stem>.json` next to the WAV.
std::filesystem::path sidecar_path(const std::filesystem::path& wav_path);

/// WAV plus JSON sidecar. Samples are stored as float32, so a save/load
/// round trip is exact only to float precision.
void save_ir(const AmbisonicIR& ir, const std::filesystem::path& wav_path, const IrSidecar& sidecar);
void save_ir(const AmbisonicIR& ir, const std::filesystem::path& wav_path);
/// Loads the WAV; the sidecar, when present, supplies format metadata.
AmbisonicIR load_ir(const std::filesystem::path& wav_path);

}  // namespace srir
