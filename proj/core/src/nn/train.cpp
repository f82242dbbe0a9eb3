#include "srir/nn/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "srir/error.hpp"

namespace srir::nn {

// --- gradient checking -----------------------------------------------------

GradCheckReport grad_check(ParamSet& params, const std::function<Var()>& loss_fn, const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) fail(ErrorCode::kDomain, "grad_check epsilon must be positive");
  params.zero_grad();
  backward(loss_fn());

  GradCheckReport report;
  Rng rng(options.seed);
  for (auto& [name, var] : params.entries()) {
    const std::size_t n = var.value().size();
    Tensor analytic = var.grad().size() == n ? var.grad() : Tensor(var.shape());
    if (!analytic.all_finite()) fail(ErrorCode::kNumerical, "non-finite gradient in parameter block " + name);

    std::vector<std::size_t> picks(n);
    std::iota(picks.begin(), picks.end(), 0);
    if (options.max_entries_per_block > 0 && options.max_entries_per_block < n) {
      for (std::size_t i = 0; i < options.max_entries_per_block; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (n - i));
        std::swap(picks[i], picks[j]);
      }
      picks.resize(options.max_entries_per_block);
    }

    double block_max = 0.0;
    Tensor& value = var.mutable_value();
    for (std::size_t i : picks) {
      const double saved = value.data[i];
      value.data[i] = saved + options.epsilon;
      const double up = loss_fn().value().data[0];
      value.data[i] = saved - options.epsilon;
      const double down = loss_fn().value().data[0];
      value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = analytic.data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      if (!std::isfinite(numeric)) fail(ErrorCode::kNumerical, "non-finite loss while probing block " + name);
      if (rel > block_max) block_max = rel;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_block = name;
        report.worst_index = i;
      }
      ++report.checked;
    }
    report.per_block.emplace_back(name, block_max);
  }
  params.zero_grad();
  return report;
}

// --- training ----------------------------------------------------------------

TrainingExample make_example(const SceneGraph& scene, const PositionPair& pair, const AmbisonicIR& lor,
                             const PerceptualParams& params, const ModelConfig& cfg) {
  params.validate();
  if (params.e_lr.size() < cfg.n_bands) {
    fail(ErrorCode::kShape, "parameters carry " + std::to_string(params.e_lr.size()) + " envelope bands, model needs " +
                                std::to_string(cfg.n_bands));
  }
  TrainingExample ex;
  ex.input = make_input(scene, pair, lor, cfg);

  const std::size_t L = cfg.er_length;
  ex.er_target = Tensor(Shape{kAmbiChannels, L});
  double energy = 0.0;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    const auto& ch = params.h_er_norm[c];
    for (std::size_t i = 0; i < std::min(L, ch.size()); ++i) {
      ex.er_target.data[c * L + i] = ch[i];
      energy += ch[i] * ch[i];
    }
  }
  if (energy > 0.0) {
    const double s = 1.0 / std::sqrt(energy);
    for (double& v : ex.er_target.data) v *= s;
  }

  ex.aux_target = Tensor(Shape{1, 3}, std::vector<double>{params.t60, params.g_er, params.g_lr});

  ex.lr_target = Tensor(Shape{cfg.n_bands, cfg.n_env_points});
  double peak = 0.0;
  for (std::size_t b = 0; b < cfg.n_bands; ++b) {
    const std::vector<double> row = interp_envelope(params.e_lr[b], cfg.n_env_points);
    for (std::size_t j = 0; j < cfg.n_env_points; ++j) {
      ex.lr_target.data[b * cfg.n_env_points + j] = row[j];
      peak = std::max(peak, row[j]);
    }
  }
  if (peak > 0.0) {
    for (double& v : ex.lr_target.data) v /= peak;
  }
  return ex;
}

std::pair<dsp::MelConfig, dsp::MelConfig> er_mel_configs(const ModelConfig& cfg) {
  auto fit = [&](dsp::MelConfig m) {
    m.sample_rate = cfg.sample_rate;
    if (cfg.er_length < m.n_fft) {
      std::size_t n = 4;
      while (n * 2 <= cfg.er_length) n *= 2;
      m.hop = std::max<std::size_t>(1, m.hop * n / m.n_fft);
      m.n_fft = n;
      m.n_mels = std::min(m.n_mels, n / 2);
    }
    return m;
  };
  if (cfg.er_length < 4) fail(ErrorCode::kConfig, "er_length must be at least 4 samples for the mel loss");
  return {fit(dsp::MelConfig::spectral()), fit(dsp::MelConfig::temporal())};
}

namespace {

AmbisonicIR ir_from_rows(const Tensor& t, double sample_rate) {
  const std::size_t L = t.dim(1);
  AmbisonicIR ir = AmbisonicIR::zeros(L, sample_rate);
  for (std::size_t c = 0; c < kAmbiChannels; ++c) {
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(c * L), L, ir.channels[c].begin());
  }
  return ir;
}

}  // namespace

Var example_loss(const SrirModel& model, const TrainingExample& example, const TrainOptions& options,
                 LossTerms* terms) {
  const ModelConfig& cfg = model.config();
  const ModelOutput out = model.forward(example.input, options.use_lor);
  const auto [cfg1, cfg2] = er_mel_configs(cfg);
  const AmbisonicIR target = ir_from_rows(example.er_target, cfg.sample_rate);

  const Var er_loss = custom_scalar(out.er, [&](const Tensor& value, Tensor& grad) {
    const AmbisonicIR pred = ir_from_rows(value, cfg.sample_rate);
    AmbisonicIR g;
    const LossBreakdown lb = loss_total(pred, target, options.er_weights, cfg1, cfg2, &g);
    const std::size_t L = value.dim(1);
    for (std::size_t c = 0; c < kAmbiChannels; ++c) {
      std::copy_n(g.channels[c].begin(), L, grad.data.begin() + static_cast<std::ptrdiff_t>(c * L));
    }
    return lb.total;
  });
  const Var aux_loss = mae_loss(out.aux, example.aux_target);
  const Var lr_loss = mae_loss(out.lr, example.lr_target);
  const Var total = add(add(er_loss, aux_loss), lr_loss);
  if (terms != nullptr) {
    terms->er = er_loss.value().data[0];
    terms->aux = aux_loss.value().data[0];
    terms->lr = lr_loss.value().data[0];
    terms->total = total.value().data[0];
  }
  return total;
}

double evaluate_loss(const SrirModel& model, const std::vector<TrainingExample>& examples,
                     const TrainOptions& options) {
  if (examples.empty()) fail(ErrorCode::kTraining, "no training examples");
  double s = 0.0;
  for (const auto& ex : examples) s += example_loss(model, ex, options).value().data[0];
  return s / static_cast<double>(examples.size());
}

TrainResult train(SrirModel& model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                  const std::function<void(std::size_t, double)>& on_step) {
  if (examples.empty()) fail(ErrorCode::kTraining, "no training examples");
  if (options.batch_size == 0) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (!(options.learning_rate > 0.0) || options.momentum < 0.0 || options.momentum >= 1.0) {
    fail(ErrorCode::kConfig, "learning rate must be > 0 and momentum in [0, 1)");
  }
  options.er_weights.validate();

  TrainResult result;
  result.initial_loss = evaluate_loss(model, examples, options);
  if (!std::isfinite(result.initial_loss)) fail(ErrorCode::kTraining, "initial loss is not finite");

  auto& entries = model.params().entries();
  std::vector<Tensor> velocity;
  velocity.reserve(entries.size());
  for (const auto& [name, v] : entries) velocity.emplace_back(v.shape());

  Rng rng(options.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch = std::min(options.batch_size, examples.size());

  for (std::size_t step = 0; step < options.steps; ++step) {
    model.params().zero_grad();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);
        cursor = 0;
      }
      const Var loss = affine(example_loss(model, examples[order[cursor++]], options), 1.0 / static_cast<double>(batch), 0.0);
      batch_loss += loss.value().data[0];
      backward(loss);
    }
    if (!std::isfinite(batch_loss)) {
      fail(ErrorCode::kTraining, "loss diverged at step " + std::to_string(step));
    }

    double norm2 = 0.0;
    for (const auto& [name, v] : entries) {
      if (v.grad().size() == 0) continue;
      for (double g : v.grad().data) norm2 += g * g;
    }
    if (!std::isfinite(norm2)) fail(ErrorCode::kTraining, "gradient diverged at step " + std::to_string(step));
    const double norm = std::sqrt(norm2);
    const double scale = options.clip_norm > 0.0 && norm > options.clip_norm ? options.clip_norm / norm : 1.0;

    for (std::size_t p = 0; p < entries.size(); ++p) {
      Var& v = entries[p].second;
      if (v.grad().size() == 0) continue;
      Tensor& value = v.mutable_value();
      const auto& g = v.grad().data;
      auto& vel = velocity[p].data;
      for (std::size_t i = 0; i < value.data.size(); ++i) {
        vel[i] = options.momentum * vel[i] + scale * g[i];
        value.data[i] -= options.learning_rate * vel[i];
      }
    }
    result.losses.push_back(batch_loss);
    if (on_step) on_step(step, batch_loss);
  }
  model.params().zero_grad();
  result.final_loss = evaluate_loss(model, examples, options);
  if (!std::isfinite(result.final_loss)) {
    fail(ErrorCode::kTraining, "loss diverged at step " + std::to_string(options.steps));
  }
  return result;
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'R', 'I', 'R', 'C', 'K', 'P', 'T'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(ErrorCode::kParse, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SrirModel& model, const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["config"] = model.config().to_json();
  header["metadata"] = metadata;
  nlohmann::json list = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, v] : model.params().entries()) {
    list.push_back({{"name", name}, {"shape", v.shape()}, {"offset", offset}});
    offset += v.value().size();
  }
  header["params"] = std::move(list);
  header["count"] = offset;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::kIo, "cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, v] : model.params().entries()) {
    for (double d : v.value().data) put_u64(os, std::bit_cast<std::uint64_t>(d));
  }
  if (!os) fail(ErrorCode::kIo, "failed writing checkpoint " + path.string());
}

SrirModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    fail(ErrorCode::kParse, path.string() + " is not a checkpoint (bad magic)");
  }
  const std::uint64_t len = get_u64(is);
  if (len > (1u << 26)) fail(ErrorCode::kParse, "checkpoint header is implausibly large");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) fail(ErrorCode::kParse, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format_version", 0) != 1) fail(ErrorCode::kParse, "unsupported checkpoint version");

  SrirModel model(ModelConfig::from_json(header.at("config")), 0);
  auto& entries = model.params().entries();
  const auto& list = header.at("params");
  if (list.size() != entries.size()) fail(ErrorCode::kShape, "checkpoint parameter count does not match its config");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [name, v] = entries[i];
    if (list[i].at("name").get<std::string>() != name || list[i].at("shape").get<Shape>() != v.shape()) {
      fail(ErrorCode::kShape, "checkpoint parameter " + std::to_string(i) + " does not match " + name +
                                  shape_string(v.shape()));
    }
    for (double& d : v.mutable_value().data) d = std::bit_cast<double>(get_u64(is));
  }
  if (metadata != nullptr) *metadata = header.value("metadata", nlohmann::json::object());
  return model;
}

}  // namespace srir::nn
