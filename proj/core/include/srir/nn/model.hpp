#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "srir/ambisonic_ir.hpp"
#include "srir/nn/layers.hpp"
#include "srir/param_synth.hpp"
#include "srir/scene.hpp"

namespace srir::nn {

/// Per-face input features: centroid / 10 m (3), unit normal (3),
/// log(1 + area) (1), reflectivity (8 bands), scattering (8 bands).
inline constexpr std::size_t kFaceFeatures = 23;

struct ModelConfig {
  std::size_t in_features = kFaceFeatures;
  /// One entry per GCN block; the last width must equal d_model.
  std::vector<std::size_t> gcn_widths{32, 32, 32, 32};
  std::vector<double> pool_ratios{0.8, 0.8, 0.8, 0.8};

  std::size_t d_model = 32;
  std::size_t n_heads = 2;
  std::size_t n_enc_layers = 1;
  std::size_t n_dec_layers = 1;
  std::size_t ffn_hidden = 64;

  /// Positional encoding: n frequencies per coordinate, wavelengths
  /// base, base/2, base/4, ... metres.
  std::size_t pos_freqs = 8;
  double pos_base_wavelength = 20.0;

  /// LoR input window and the constant gain applied before the waveform branch.
  std::size_t lor_length = 4096;
  double lor_gain = 10.0;
  std::vector<std::size_t> wave_channels{8, 16};
  std::vector<std::size_t> wave_kernels{9, 9};
  std::vector<std::size_t> wave_strides{4, 4};
  std::size_t wave_hidden = 32;

  std::size_t mel_n_fft = 256;
  std::size_t mel_hop = 64;
  std::size_t mel_n_mels = 32;
  std::size_t mel_channels = 8;
  std::size_t mel_kernel = 3;
  std::size_t mel_stride = 2;  // along the mel axis
  std::size_t mel_hidden = 32;

  std::size_t head_hidden = 64;
  std::size_t er_length = 1024;
  std::size_t n_bands = kNumBands;
  std::size_t n_env_points = kEnvelopePoints;
  double sample_rate = kDefaultSampleRate;

  /// Throws kConfig describing the first inconsistency.
  void validate() const;

  std::size_t scene_dim() const { return 2 * d_model; }
  std::size_t lor_dim() const { return wave_hidden + mel_hidden; }
  std::size_t pos_encoding_dim() const { return 6 * 2 * pos_freqs; }
  /// Frames produced by the mel front end for lor_length samples.
  std::size_t mel_frames() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& doc);

  /// Minimal configuration used for end-to-end gradient checks.
  static ModelConfig tiny();
};

/// Preprocessed, constant model inputs for one (scene, pair, LoR) triple.
struct ModelInput {
  Tensor faces;  // [N x kFaceFeatures]
  Eigen::MatrixXd adjacency;
  PositionPair pair;
  Tensor lor_wave;  // [4 x lor_length]
  Tensor lor_mel;   // [4 x frames x n_mels]
};

Tensor face_features(const SceneGraph& scene);

/// Interleaved sin/cos of the 6 source/listener coordinates: [1 x 12 n_freqs].
Tensor positional_encoding(const PositionPair& pair, std::size_t n_freqs, double base_wavelength);

/// Crops or zero-pads to cfg.lor_length and computes the mel branch input.
void prepare_lor(const AmbisonicIR& lor, const ModelConfig& cfg, Tensor& wave, Tensor& mel);

ModelInput make_input(const SceneGraph& scene, const PositionPair& pair, const AmbisonicIR& lor,
                      const ModelConfig& cfg);

struct ForwardTrace {
  std::vector<std::vector<std::size_t>> pooled_indices;  // per GCN block
  std::vector<Var> encoder_attention;                    // per layer and head
  std::vector<Var> decoder_attention;                    // cross-attention, per layer and head
};

struct ModelOutput {
  Var er;   // [4 x er_length], unit L2 norm
  Var aux;  // [1 x 3]: t60, g_er, g_lr
  Var lr;   // [n_bands x n_env_points]
  Var scene_embedding;
  Var lor_embedding;
};

class SrirModel {
 public:
  SrirModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// GCN blocks with Top-K pooling; returns the pooled tokens [K x d_model].
  Var graph_encode(const Tensor& faces, const Eigen::MatrixXd& adjacency, ForwardTrace* trace = nullptr) const;
  Var transformer_encode(const Var& tokens, ForwardTrace* trace = nullptr) const;
  /// Two query tokens (source, listener): [2 x d_model].
  Var positional_query(const PositionPair& pair) const;
  Var transformer_decode(const Var& queries, const Var& memory, ForwardTrace* trace = nullptr) const;
  /// Scene embedding [1 x 2 d_model].
  Var encode_scene(const ModelInput& input, ForwardTrace* trace = nullptr) const;
  /// LoR embedding [1 x lor_dim] from preprocessed inputs.
  Var encode_lor(const Tensor& wave, const Tensor& mel) const;
  Var encode_lor(const AmbisonicIR& lor) const;
  ModelOutput decode(const Var& scene_embedding, const Var& lor_embedding) const;

  /// Full forward pass. With `use_lor` false the LoR embedding is replaced by zeros.
  ModelOutput forward(const ModelInput& input, bool use_lor = true, ForwardTrace* trace = nullptr) const;

  /// Converts head outputs into synthesizer parameters (requires n_bands == 8).
  PerceptualParams to_params(const ModelOutput& out) const;

 private:
  struct Heads {
    Linear hidden;
    Linear out;
  };

  ModelConfig cfg_;
  ParamSet params_;

  std::vector<Var> gcn_weights_;
  std::vector<Var> pool_vectors_;
  std::vector<EncoderLayer> encoder_;
  LayerNorm encoder_norm_;
  Linear query_proj_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm decoder_norm_;
  std::vector<Conv1d> wave_convs_;
  Gru wave_gru_;
  Conv2d mel_conv_;
  Gru mel_gru_;
  Heads er_head_, aux_head_, lr_head_;
};

}  // namespace srir::nn
