#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "srir/error.hpp"
#include "srir/image_source.hpp"
#include "srir/nn/model.hpp"
#include "srir/nn/train.hpp"
#include "srir/scene.hpp"

using namespace srir;
using namespace srir::nn;

namespace {

struct Fixture {
  SceneGraph scene = make_shoebox({5.0, 4.0, 3.0}, uniform_bands(0.8), uniform_bands(0.2));
  PositionPair pair{{1.2, 1.1, 1.4}, {3.6, 2.7, 1.6}};
  AmbisonicIR lor = compute_lor(scene, pair);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ModelConfig middle_config() {
  ModelConfig c;
  c.gcn_widths = {16, 16, 16};
  c.pool_ratios = {0.9, 0.7, 0.5};
  c.d_model = 16;
  c.n_heads = 4;
  c.n_enc_layers = 2;
  c.n_dec_layers = 2;
  c.ffn_hidden = 24;
  c.er_length = 512;
  return c;
}

std::vector<ModelConfig> configs() { return {ModelConfig::tiny(), middle_config(), ModelConfig{}}; }

PerceptualParams target_params(const ModelConfig& cfg) {
  PerceptualParams p;
  p.t60 = 0.4;
  p.g_er = 0.9;
  p.g_lr = 1.3;
  const double s = 1.0 / std::sqrt(4.0 * (1.0 + 0.16));
  for (auto& ch : p.h_er_norm) {
    ch.assign(cfg.er_length, 0.0);
    ch[5] = s;
    ch[20] = -0.4 * s;
  }
  p.e_lr.assign(kNumBands, std::vector<double>(kEnvelopePoints, 0.0));
  for (std::size_t b = 0; b < kNumBands; ++b) {
    for (std::size_t i = 0; i < kEnvelopePoints; ++i) p.e_lr[b][i] = std::exp(-0.1 * static_cast<double>(i + b));
  }
  return p;
}

}  // namespace

TEST(Model, ShapesForThreeConfigs) {
  const auto& f = fixture();
  for (const auto& cfg : configs()) {
    const SrirModel model(cfg, 1);
    const auto input = make_input(f.scene, f.pair, f.lor, cfg);
    EXPECT_EQ(input.faces.shape, (Shape{12, kFaceFeatures}));
    EXPECT_EQ(input.lor_wave.shape, (Shape{4, cfg.lor_length}));
    EXPECT_EQ(input.lor_mel.shape, (Shape{4, cfg.mel_frames(), cfg.mel_n_mels}));

    ForwardTrace trace;
    const auto out = model.forward(input, true, &trace);
    EXPECT_EQ(out.er.shape(), (Shape{4, cfg.er_length}));
    EXPECT_EQ(out.aux.shape(), (Shape{1, 3}));
    EXPECT_EQ(out.lr.shape(), (Shape{cfg.n_bands, cfg.n_env_points}));
    EXPECT_EQ(out.scene_embedding.shape(), (Shape{1, cfg.scene_dim()}));
    EXPECT_EQ(out.lor_embedding.shape(), (Shape{1, cfg.lor_dim()}));

    ASSERT_EQ(trace.pooled_indices.size(), cfg.gcn_widths.size());
    std::size_t n = 12;
    for (std::size_t l = 0; l < cfg.gcn_widths.size(); ++l) {
      n = static_cast<std::size_t>(std::ceil(cfg.pool_ratios[l] * static_cast<double>(n) - 1e-12));
      EXPECT_EQ(trace.pooled_indices[l].size(), n);
    }
    EXPECT_EQ(trace.encoder_attention.size(), cfg.n_enc_layers * cfg.n_heads);
    EXPECT_EQ(trace.decoder_attention.size(), cfg.n_dec_layers * cfg.n_heads);
    for (const auto& w : trace.decoder_attention) EXPECT_EQ(w.shape(), (Shape{2, n}));

    EXPECT_TRUE(out.er.value().all_finite());
    EXPECT_TRUE(out.aux.value().all_finite());
    EXPECT_TRUE(out.lr.value().all_finite());
    double energy = 0.0;
    for (double v : out.er.value().data) energy += v * v;
    EXPECT_NEAR(energy, 1.0, 1e-6);
    for (double v : out.aux.value().data) EXPECT_GT(v, 0.0);
    for (double v : out.lr.value().data) EXPECT_GE(v, 0.0);
  }
}

TEST(Model, PositionalQueryHasTwoTokens) {
  const SrirModel model(ModelConfig{}, 2);
  EXPECT_EQ(model.positional_query(fixture().pair).shape(), (Shape{2, 32}));
}

TEST(Model, ForwardIsDeterministic) {
  const auto& f = fixture();
  const auto cfg = middle_config();
  const auto input = make_input(f.scene, f.pair, f.lor, cfg);
  const SrirModel a(cfg, 9);
  const SrirModel b(cfg, 9);
  EXPECT_EQ(a.forward(input).er.value().data, b.forward(input).er.value().data);
  const SrirModel c(cfg, 10);
  EXPECT_NE(a.forward(input).er.value().data, c.forward(input).er.value().data);
}

TEST(Model, WithoutLorUsesZeroEmbedding) {
  const auto& f = fixture();
  const SrirModel model(ModelConfig::tiny(), 5);
  const auto input = make_input(f.scene, f.pair, f.lor, model.config());
  const auto out = model.forward(input, false);
  for (double v : out.lor_embedding.value().data) EXPECT_EQ(v, 0.0);
}

TEST(Model, ToParamsRequiresEightBands) {
  const auto& f = fixture();
  const SrirModel tiny(ModelConfig::tiny(), 5);
  const auto out = tiny.forward(make_input(f.scene, f.pair, f.lor, tiny.config()));
  EXPECT_THROW(tiny.to_params(out), Error);

  const SrirModel full(ModelConfig{}, 5);
  const auto p = full.to_params(full.forward(make_input(f.scene, f.pair, f.lor, full.config())));
  EXPECT_GT(p.t60, 0.0);
  EXPECT_EQ(p.h_er_norm[0].size(), ModelConfig{}.er_length);
  EXPECT_EQ(p.e_lr.size(), kNumBands);
}

TEST(ModelConfigJson, ValidationAndJsonRoundTrip) {
  for (const auto& cfg : configs()) {
    const auto back = ModelConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.to_json(), cfg.to_json());
  }
  ModelConfig bad;
  bad.n_heads = 5;
  EXPECT_THROW(bad.validate(), Error);
  bad = ModelConfig{};
  bad.pool_ratios[0] = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = ModelConfig{};
  bad.gcn_widths.back() = 31;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Training, DeterministicAndDecreasing) {
  const auto& f = fixture();
  const auto cfg = ModelConfig::tiny();
  const auto ex = make_example(f.scene, f.pair, f.lor, target_params(cfg), cfg);
  TrainOptions opt;
  opt.steps = 40;
  opt.batch_size = 1;
  opt.seed = 3;
  SrirModel a(cfg, 3);
  SrirModel b(cfg, 3);
  const auto ra = train(a, {ex}, opt);
  const auto rb = train(b, {ex}, opt);
  EXPECT_EQ(ra.losses, rb.losses);
  EXPECT_LT(ra.final_loss, ra.initial_loss);
  EXPECT_EQ(ra.losses.size(), 40u);
}

TEST(Training, ExampleTargetsAreNormalized) {
  const auto& f = fixture();
  const auto cfg = ModelConfig::tiny();
  const auto ex = make_example(f.scene, f.pair, f.lor, target_params(cfg), cfg);
  double e = 0.0;
  for (double v : ex.er_target.data) e += v * v;
  EXPECT_NEAR(e, 1.0, 1e-12);
  EXPECT_EQ(ex.lr_target.shape, (Shape{cfg.n_bands, cfg.n_env_points}));
  double peak = 0.0;
  for (double v : ex.lr_target.data) peak = std::max(peak, v);
  EXPECT_NEAR(peak, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(ex.aux_target[0], 0.4);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto& f = fixture();
  const auto cfg = middle_config();
  const SrirModel model(cfg, 12);
  const auto path = std::filesystem::temp_directory_path() / "srirkit_test_ckpt.bin";
  save_checkpoint(path, model, {{"note", "unit"}});
  nlohmann::json meta;
  const SrirModel back = load_checkpoint(path, &meta);
  EXPECT_EQ(meta["note"], "unit");
  EXPECT_EQ(back.config().to_json(), cfg.to_json());
  ASSERT_EQ(back.params().entries().size(), model.params().entries().size());
  for (std::size_t i = 0; i < model.params().entries().size(); ++i) {
    EXPECT_EQ(back.params().entries()[i].first, model.params().entries()[i].first);
    EXPECT_EQ(back.params().entries()[i].second.value().data, model.params().entries()[i].second.value().data);
  }
  const auto input = make_input(f.scene, f.pair, f.lor, cfg);
  EXPECT_EQ(back.forward(input).er.value().data, model.forward(input).er.value().data);

  // Truncated file.
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(load_checkpoint(path), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), Error);
}
