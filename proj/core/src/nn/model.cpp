#include "srir/nn/model.hpp"

#include <cmath>
#include <numbers>

#include "srir/dsp/mel.hpp"
#include "srir/error.hpp"

namespace srir::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfig, "model config: " + what);
}

dsp::MelConfig lor_mel_config(const ModelConfig& cfg) {
  return {cfg.mel_n_fft, cfg.mel_hop, cfg.mel_n_mels, cfg.sample_rate, 1e-5};
}

std::size_t conv_out(std::size_t n, std::size_t k, std::size_t s) { return n < k ? 0 : (n - k) / s + 1; }

std::size_t mel_width_after_conv(const ModelConfig& cfg) {
  return conv_out(cfg.mel_n_mels, cfg.mel_kernel, cfg.mel_stride);
}

std::size_t wave_steps(const ModelConfig& cfg) {
  std::size_t t = cfg.lor_length;
  for (std::size_t i = 0; i < cfg.wave_kernels.size(); ++i) t = conv_out(t, cfg.wave_kernels[i], cfg.wave_strides[i]);
  return t;
}

}  // namespace

std::size_t ModelConfig::mel_frames() const { return lor_mel_config(*this).frames(lor_length); }

void ModelConfig::validate() const {
  require(in_features == kFaceFeatures, "in_features must be " + std::to_string(kFaceFeatures));
  require(!gcn_widths.empty(), "at least one GCN block is required");
  require(gcn_widths.size() == pool_ratios.size(), "gcn_widths and pool_ratios differ in length");
  for (double r : pool_ratios) require(r > 0.0 && r <= 1.0, "pool ratios must lie in (0, 1]");
  for (std::size_t w : gcn_widths) require(w > 0, "GCN widths must be positive");
  require(gcn_widths.back() == d_model, "the last GCN width must equal d_model");
  require(d_model > 0 && n_heads > 0 && d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(ffn_hidden > 0 && pos_freqs > 0 && pos_base_wavelength > 0.0, "positive sizes required");
  require(wave_channels.size() == wave_kernels.size() && wave_kernels.size() == wave_strides.size() &&
              !wave_channels.empty(),
          "waveform branch lists must be non-empty and equally long");
  for (std::size_t i = 0; i < wave_kernels.size(); ++i) {
    require(wave_channels[i] > 0 && wave_kernels[i] > 0 && wave_strides[i] > 0, "waveform conv sizes must be positive");
  }
  require(wave_steps(*this) > 0, "lor_length too short for the waveform convolutions");
  require(wave_hidden > 0 && mel_hidden > 0 && mel_channels > 0 && mel_kernel > 0 && mel_stride > 0,
          "LoR branch sizes must be positive");
  lor_mel_config(*this).validate();
  require(mel_frames() >= mel_kernel, "lor_length too short for the mel convolution");
  require(mel_width_after_conv(*this) > 0, "too few mel bands for the mel convolution");
  require(head_hidden > 0 && er_length > 0 && n_bands > 0 && n_env_points >= 2, "head sizes must be positive");
  require(sample_rate > 0.0, "sample_rate must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"in_features", in_features},   {"gcn_widths", gcn_widths},
          {"pool_ratios", pool_ratios},   {"d_model", d_model},
          {"n_heads", n_heads},           {"n_enc_layers", n_enc_layers},
          {"n_dec_layers", n_dec_layers}, {"ffn_hidden", ffn_hidden},
          {"pos_freqs", pos_freqs},       {"pos_base_wavelength", pos_base_wavelength},
          {"lor_length", lor_length},     {"lor_gain", lor_gain},
          {"wave_channels", wave_channels}, {"wave_kernels", wave_kernels},
          {"wave_strides", wave_strides}, {"wave_hidden", wave_hidden},
          {"mel_n_fft", mel_n_fft},       {"mel_hop", mel_hop},
          {"mel_n_mels", mel_n_mels},     {"mel_channels", mel_channels},
          {"mel_kernel", mel_kernel},     {"mel_stride", mel_stride},
          {"mel_hidden", mel_hidden},     {"head_hidden", head_hidden},
          {"er_length", er_length},       {"n_bands", n_bands},
          {"n_env_points", n_env_points}, {"sample_rate", sample_rate}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kConfig, "model config must be a JSON object");
  ModelConfig c;
  const nlohmann::json defaults = c.to_json();
  for (const auto& [key, value] : doc.items()) {
    if (!defaults.contains(key)) fail(ErrorCode::kConfig, "unknown model config key \"" + key + "\"");
  }
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) {
      try {
        doc.at(key).get_to(field);
      } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::kConfig, std::string("model config key \"") + key + "\" has the wrong type");
      }
    }
  };
  get("in_features", c.in_features);
  get("gcn_widths", c.gcn_widths);
  get("pool_ratios", c.pool_ratios);
  get("d_model", c.d_model);
  get("n_heads", c.n_heads);
  get("n_enc_layers", c.n_enc_layers);
  get("n_dec_layers", c.n_dec_layers);
  get("ffn_hidden", c.ffn_hidden);
  get("pos_freqs", c.pos_freqs);
  get("pos_base_wavelength", c.pos_base_wavelength);
  get("lor_length", c.lor_length);
  get("lor_gain", c.lor_gain);
  get("wave_channels", c.wave_channels);
  get("wave_kernels", c.wave_kernels);
  get("wave_strides", c.wave_strides);
  get("wave_hidden", c.wave_hidden);
  get("mel_n_fft", c.mel_n_fft);
  get("mel_hop", c.mel_hop);
  get("mel_n_mels", c.mel_n_mels);
  get("mel_channels", c.mel_channels);
  get("mel_kernel", c.mel_kernel);
  get("mel_stride", c.mel_stride);
  get("mel_hidden", c.mel_hidden);
  get("head_hidden", c.head_hidden);
  get("er_length", c.er_length);
  get("n_bands", c.n_bands);
  get("n_env_points", c.n_env_points);
  get("sample_rate", c.sample_rate);
  c.validate();
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.gcn_widths = {6, 6};
  c.pool_ratios = {0.8, 0.8};
  c.d_model = 6;
  c.n_heads = 2;
  c.ffn_hidden = 6;
  c.pos_freqs = 2;
  c.lor_length = 96;
  c.wave_channels = {2};
  c.wave_kernels = {5};
  c.wave_strides = {8};
  c.wave_hidden = 3;
  c.mel_n_fft = 32;
  c.mel_hop = 16;
  c.mel_n_mels = 6;
  c.mel_channels = 2;
  c.mel_hidden = 3;
  c.head_hidden = 4;
  c.er_length = 32;
  c.n_bands = 2;
  c.n_env_points = 3;
  return c;
}

Tensor face_features(const SceneGraph& scene) {
  const std::size_t n = scene.size();
  Tensor t(Shape{n, kFaceFeatures});
  for (std::size_t i = 0; i < n; ++i) {
    const Face& f = scene.face(i);
    double* row = &t.data[i * kFaceFeatures];
    row[0] = f.centroid.x / 10.0;
    row[1] = f.centroid.y / 10.0;
    row[2] = f.centroid.z / 10.0;
    row[3] = f.normal.x;
    row[4] = f.normal.y;
    row[5] = f.normal.z;
    row[6] = std::log1p(f.area);
    for (std::size_t b = 0; b < kNumBands; ++b) {
      row[7 + b] = f.reflectivity[b];
      row[7 + kNumBands + b] = f.scattering[b];
    }
  }
  return t;
}

Tensor positional_encoding(const PositionPair& pair, std::size_t n_freqs, double base_wavelength) {
  const double coords[6] = {pair.source.x,   pair.source.y,   pair.source.z,
                            pair.listener.x, pair.listener.y, pair.listener.z};
  Tensor t(Shape{1, 12 * n_freqs});
  std::size_t i = 0;
  for (double v : coords) {
    double omega = 2.0 * std::numbers::pi / base_wavelength;
    for (std::size_t k = 0; k < n_freqs; ++k, omega *= 2.0) {
      t.data[i++] = std::sin(omega * v);
      t.data[i++] = std::cos(omega * v);
    }
  }
  return t;
}

void prepare_lor(const AmbisonicIR& lor, const ModelConfig& cfg, Tensor& wave, Tensor& mel) {
  lor.validate();
  const std::size_t L = cfg.lor_length;
  wave = Tensor(Shape{kAmbiChannels, L});
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    const auto& ch = lor.channels[c];
    const std::size_t n = std::min(L, ch.size());
    for (std::size_t i = 0; i < n; ++i) wave.data[c * L + i] = cfg.lor_gain * ch[i];
  }
  const dsp::MelAnalyzer analyzer(lor_mel_config(cfg));
  const std::size_t frames = cfg.mel_frames();
  const std::size_t m = cfg.mel_n_mels;
  mel = Tensor(Shape{kAmbiChannels, frames, m});
  std::vector<double> buf(L);
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    // Mel of the unscaled, window-fitted signal; log values are brought to O(1) by a fixed 1/10.
    for (std::size_t i = 0; i < L; ++i) buf[i] = wave.data[c * L + i] / cfg.lor_gain;
    const dsp::Matrix lm = analyzer.log_mel(buf);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t j = 0; j < m; ++j) mel.data[(c * frames + f) * m + j] = lm(f, j) / 10.0;
    }
  }
}

ModelInput make_input(const SceneGraph& scene, const PositionPair& pair, const AmbisonicIR& lor,
                      const ModelConfig& cfg) {
  if (scene.empty()) fail(ErrorCode::kShape, "the scene encoder needs at least one face");
  ModelInput in;
  in.faces = face_features(scene);
  in.adjacency = scene.adjacency();
  in.pair = pair;
  prepare_lor(lor, cfg, in.lor_wave, in.lor_mel);
  return in;
}

SrirModel::SrirModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  std::size_t in = cfg_.in_features;
  for (std::size_t l = 0; l < cfg_.gcn_widths.size(); ++l) {
    const std::size_t out = cfg_.gcn_widths[l];
    const std::string name = "gcn" + std::to_string(l);
    gcn_weights_.push_back(params_.add_glorot(name + ".w", Shape{in, out}, in, out, rng));
    Tensor p(Shape{out});
    for (double& v : p.data) v = rng.uniform(-1.0, 1.0);
    pool_vectors_.push_back(params_.add(name + ".pool", std::move(p)));
    in = out;
  }
  const std::size_t d = cfg_.d_model;
  for (std::size_t l = 0; l < cfg_.n_enc_layers; ++l) {
    encoder_.push_back(EncoderLayer::create(params_, "enc" + std::to_string(l), d, cfg_.n_heads, cfg_.ffn_hidden, rng));
  }
  encoder_norm_ = LayerNorm::create(params_, "enc.norm", d);
  query_proj_ = Linear::create(params_, "query", cfg_.pos_encoding_dim(), 2 * d, rng);
  for (std::size_t l = 0; l < cfg_.n_dec_layers; ++l) {
    decoder_.push_back(DecoderLayer::create(params_, "dec" + std::to_string(l), d, cfg_.n_heads, cfg_.ffn_hidden, rng));
  }
  decoder_norm_ = LayerNorm::create(params_, "dec.norm", d);

  std::size_t ch = kAmbiChannels;
  for (std::size_t i = 0; i < cfg_.wave_channels.size(); ++i) {
    wave_convs_.push_back(Conv1d::create(params_, "wave.conv" + std::to_string(i), ch, cfg_.wave_channels[i],
                                         cfg_.wave_kernels[i], cfg_.wave_strides[i], rng));
    ch = cfg_.wave_channels[i];
  }
  wave_gru_ = Gru::create(params_, "wave.gru", ch, cfg_.wave_hidden, rng);
  mel_conv_ = Conv2d::create(params_, "mel.conv", kAmbiChannels, cfg_.mel_channels, cfg_.mel_kernel, cfg_.mel_kernel, 1,
                             cfg_.mel_stride, rng);
  mel_gru_ = Gru::create(params_, "mel.gru", cfg_.mel_channels * mel_width_after_conv(cfg_), cfg_.mel_hidden, rng);

  const std::size_t z = cfg_.scene_dim() + cfg_.lor_dim();
  const std::size_t h = cfg_.head_hidden;
  er_head_ = {Linear::create(params_, "er.hidden", z, h, rng),
              Linear::create(params_, "er.out", h, kAmbiChannels * cfg_.er_length, rng)};
  aux_head_ = {Linear::create(params_, "aux.hidden", z, h, rng), Linear::create(params_, "aux.out", h, 3, rng)};
  lr_head_ = {Linear::create(params_, "lr.hidden", z, h, rng),
              Linear::create(params_, "lr.out", h, cfg_.n_bands * cfg_.n_env_points, rng)};
}

Var SrirModel::graph_encode(const Tensor& faces, const Eigen::MatrixXd& adjacency, ForwardTrace* trace) const {
  if (faces.rank() != 2 || faces.dim(1) != cfg_.in_features) {
    fail(ErrorCode::kShape, "face features must be [N x " + std::to_string(cfg_.in_features) + "], got " +
                                shape_string(faces.shape));
  }
  if (faces.dim(0) == 0) fail(ErrorCode::kShape, "the scene encoder needs at least one face");
  Var x = Var::constant(faces);
  Eigen::MatrixXd a = adjacency;
  for (std::size_t l = 0; l < gcn_weights_.size(); ++l) {
    x = gcn_forward(x, normalized_adjacency_var(a), gcn_weights_[l]);
    PoolResult pooled = topk_pool(x, a, cfg_.pool_ratios[l], pool_vectors_[l]);
    if (trace != nullptr) trace->pooled_indices.push_back(pooled.indices);
    x = pooled.x;
    a = std::move(pooled.adjacency);
  }
  return x;
}

Var SrirModel::transformer_encode(const Var& tokens, ForwardTrace* trace) const {
  if (tokens.shape().size() != 2 || tokens.shape()[1] != cfg_.d_model || tokens.shape()[0] == 0) {
    fail(ErrorCode::kShape, "encoder tokens must be [K x d_model], got " + shape_string(tokens.shape()));
  }
  Var x = tokens;
  for (const auto& layer : encoder_) x = layer(x, trace != nullptr ? &trace->encoder_attention : nullptr);
  return encoder_norm_(x);
}

Var SrirModel::positional_query(const PositionPair& pair) const {
  const Var enc = Var::constant(positional_encoding(pair, cfg_.pos_freqs, cfg_.pos_base_wavelength));
  return reshape(query_proj_(enc), Shape{2, cfg_.d_model});
}

Var SrirModel::transformer_decode(const Var& queries, const Var& memory, ForwardTrace* trace) const {
  if (queries.shape().size() != 2 || queries.shape()[1] != cfg_.d_model) {
    fail(ErrorCode::kShape, "decoder queries must be [Q x d_model], got " + shape_string(queries.shape()));
  }
  Var x = queries;
  for (const auto& layer : decoder_) x = layer(x, memory, trace != nullptr ? &trace->decoder_attention : nullptr);
  return decoder_norm_(x);
}

Var SrirModel::encode_scene(const ModelInput& input, ForwardTrace* trace) const {
  const Var memory = transformer_encode(graph_encode(input.faces, input.adjacency, trace), trace);
  const Var decoded = transformer_decode(positional_query(input.pair), memory, trace);
  return reshape(decoded, Shape{1, cfg_.scene_dim()});
}

Var SrirModel::encode_lor(const Tensor& wave, const Tensor& mel) const {
  if (wave.shape != Shape{kAmbiChannels, cfg_.lor_length}) {
    fail(ErrorCode::kShape, "LoR waveform must be [4 x " + std::to_string(cfg_.lor_length) + "], got " +
                                shape_string(wave.shape));
  }
  if (mel.shape != Shape{kAmbiChannels, cfg_.mel_frames(), cfg_.mel_n_mels}) {
    fail(ErrorCode::kShape, "LoR mel input has shape " + shape_string(mel.shape));
  }
  Var w = Var::constant(wave);
  for (const auto& conv : wave_convs_) w = relu(conv(w));
  const Var wave_state = wave_gru_(transpose(w));

  const Var m = relu(mel_conv_(Var::constant(mel)));
  const Var mel_state = mel_gru_(frames_from_channels(m));
  const Var parts[2] = {wave_state, mel_state};
  return concat(parts, 1);
}

Var SrirModel::encode_lor(const AmbisonicIR& lor) const {
  Tensor wave, mel;
  prepare_lor(lor, cfg_, wave, mel);
  return encode_lor(wave, mel);
}

ModelOutput SrirModel::decode(const Var& scene_embedding, const Var& lor_embedding) const {
  if (scene_embedding.shape() != Shape{1, cfg_.scene_dim()} || lor_embedding.shape() != Shape{1, cfg_.lor_dim()}) {
    fail(ErrorCode::kShape, "decoder embeddings have shapes " + shape_string(scene_embedding.shape()) + " and " +
                                shape_string(lor_embedding.shape()));
  }
  const Var parts[2] = {scene_embedding, lor_embedding};
  const Var z = concat(parts, 1);
  ModelOutput out;
  out.scene_embedding = scene_embedding;
  out.lor_embedding = lor_embedding;
  out.er = l2_normalize(reshape(er_head_.out(relu(er_head_.hidden(z))), Shape{kAmbiChannels, cfg_.er_length}));
  out.aux = softplus(aux_head_.out(relu(aux_head_.hidden(z))));
  out.lr = reshape(softplus(lr_head_.out(relu(lr_head_.hidden(z)))), Shape{cfg_.n_bands, cfg_.n_env_points});
  return out;
}

ModelOutput SrirModel::forward(const ModelInput& input, bool use_lor, ForwardTrace* trace) const {
  const Var scene = encode_scene(input, trace);
  const Var lor = use_lor ? encode_lor(input.lor_wave, input.lor_mel)
                          : Var::constant(Tensor(Shape{1, cfg_.lor_dim()}));
  return decode(scene, lor);
}

PerceptualParams SrirModel::to_params(const ModelOutput& out) const {
  if (cfg_.n_bands != kNumBands) {
    fail(ErrorCode::kConfig, "synthesis needs " + std::to_string(kNumBands) + " envelope bands");
  }
  PerceptualParams p;
  p.sample_rate = cfg_.sample_rate;
  const auto& aux = out.aux.value().data;
  p.t60 = aux[0];
  p.g_er = aux[1];
  p.g_lr = aux[2];
  const auto& er = out.er.value().data;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    p.h_er_norm[c].assign(er.begin() + static_cast<std::ptrdiff_t>(c * cfg_.er_length),
                          er.begin() + static_cast<std::ptrdiff_t>((c + 1) * cfg_.er_length));
  }
  double energy = 0.0;
  for (double v : er) energy += v * v;
  if (energy > 0.0) {
    // Remove the epsilon shortfall of the head's normalization.
    const double s = 1.0 / std::sqrt(energy);
    for (auto& ch : p.h_er_norm) {
      for (double& v : ch) v *= s;
    }
  }
  const auto& lr = out.lr.value().data;
  p.e_lr.assign(cfg_.n_bands, {});
  for (std::size_t b = 0; b < cfg_.n_bands; ++b) {
    p.e_lr[b].assign(lr.begin() + static_cast<std::ptrdiff_t>(b * cfg_.n_env_points),
                     lr.begin() + static_cast<std::ptrdiff_t>((b + 1) * cfg_.n_env_points));
  }
  return p;
}

}  // namespace srir::nn
