#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srir/dsp/mel.hpp"
#include "srir/metrics.hpp"
#include "srir/nn/model.hpp"

namespace srir::nn {

// --- gradient checking -----------------------------------------------------

struct GradCheckOptions {
  double epsilon = 1e-4;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
  /// Entries checked per parameter block (0 = all), picked by a seeded draw.
  std::size_t max_entries_per_block = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::vector<std::pair<std::string, double>> per_block;  // max error per block
};

/// Compares backward() of `loss_fn` against central differences for every
/// parameter in `params`. Throws kNumerical naming the block when an analytic
/// gradient is not finite.
GradCheckReport grad_check(ParamSet& params, const std::function<Var()>& loss_fn, const GradCheckOptions& options = {});

// --- training ----------------------------------------------------------------

/// One supervised example with targets shaped for the decoder heads.
struct TrainingExample {
  ModelInput input;
  Tensor er_target;   // [4 x er_length], unit energy unless all zero
  Tensor aux_target;  // [1 x 3]
  Tensor lr_target;   // [n_bands x n_env_points], peak-normalized
};

/// Fits `params` to the model configuration: the early part is cropped or
/// padded to er_length and renormalized, envelopes are resampled to
/// n_env_points and divided by their peak.
TrainingExample make_example(const SceneGraph& scene, const PositionPair& pair, const AmbisonicIR& lor,
                             const PerceptualParams& params, const ModelConfig& cfg);

/// Mel resolutions used by the early-reflection loss: the defaults, shrunk
/// to fit er_length when it is shorter than their FFT size.
std::pair<dsp::MelConfig, dsp::MelConfig> er_mel_configs(const ModelConfig& cfg);

struct TrainOptions {
  std::size_t steps = 200;
  std::size_t batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  /// Global gradient-norm clip (0 disables).
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
  /// false replaces the LoR embedding by zeros (ablation).
  bool use_lor = true;
  LossWeights er_weights{};
};

struct LossTerms {
  double er = 0.0;
  double aux = 0.0;
  double lr = 0.0;
  double total = 0.0;
};

/// Training objective of one example: loss_total on the early part plus MAE
/// on the auxiliary and late-reverb heads.
Var example_loss(const SrirModel& model, const TrainingExample& example, const TrainOptions& options,
                 LossTerms* terms = nullptr);

/// Mean objective over `examples` without touching gradients.
double evaluate_loss(const SrirModel& model, const std::vector<TrainingExample>& examples,
                     const TrainOptions& options);

struct TrainResult {
  std::vector<double> losses;  // mini-batch loss per step
  double initial_loss = 0.0;   // full-set objective before the first step
  double final_loss = 0.0;     // full-set objective after the last step
};

/// Gradient descent with momentum over seeded mini-batches. Throws
/// kTraining with the step index if the loss stops being finite.
TrainResult train(SrirModel& model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                  const std::function<void(std::size_t, double)>& on_step = {});

// --- checkpoints -------------------------------------------------------------

/// "SRIRCKPT", u64 little-endian header length, JSON header (config,
/// parameter names/shapes/offsets, metadata), then float64 little-endian values.
void save_checkpoint(const std::filesystem::path& path, const SrirModel& model,
                     const nlohmann::json& metadata = nlohmann::json::object());
SrirModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace srir::nn
