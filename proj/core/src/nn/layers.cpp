#include "srir/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srir/error.hpp"
#include "srir/scene.hpp"

namespace srir::nn {

Var ParamSet::add(const std::string& name, Tensor value) {
  for (const auto& [n, v] : entries_) {
    if (n == name) fail(ErrorCode::kConfig, "duplicate parameter name " + name);
  }
  Var v = Var::leaf(std::move(value), true);
  entries_.emplace_back(name, v);
  return v;
}

Var ParamSet::add_glorot(const std::string& name, Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return add(name, std::move(t));
}

const Var& ParamSet::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  fail(ErrorCode::kReference, "no parameter named " + name);
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : entries_) n += v.value().size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, v] : entries_) v.zero_grad();
}

Linear Linear::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Linear l;
  l.w = params.add_glorot(name + ".w", Shape{in, out}, in, out, rng);
  l.b = params.add(name + ".b", Tensor(Shape{out}));
  return l;
}

LayerNorm LayerNorm::create(ParamSet& params, const std::string& name, std::size_t dim) {
  return {params.add(name + ".gamma", Tensor(Shape{dim}, 1.0)), params.add(name + ".beta", Tensor(Shape{dim}))};
}

Var gcn_forward(const Var& x, const Var& a_norm, const Var& w) {
  const auto& xs = x.shape();
  const auto& as = a_norm.shape();
  if (xs.size() != 2 || as.size() != 2 || as[0] != as[1] || as[1] != xs[0]) {
    fail(ErrorCode::kShape, "gcn_forward: features " + shape_string(xs) + " vs adjacency " + shape_string(as));
  }
  return relu(matmul(matmul(a_norm, x), w));
}

Var normalized_adjacency_var(const Eigen::MatrixXd& adjacency) {
  const Eigen::MatrixXd norm = normalize_adjacency(adjacency, true);
  const auto n = static_cast<std::size_t>(norm.rows());
  Tensor t(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) t.data[i * n + j] = norm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return Var::constant(std::move(t));
}

PoolResult topk_pool(const Var& x, const Eigen::MatrixXd& adjacency, double ratio, const Var& p) {
  if (!(ratio > 0.0 && ratio <= 1.0)) fail(ErrorCode::kDomain, "pool ratio must lie in (0, 1]");
  const auto& xs = x.shape();
  if (xs.size() != 2 || p.value().size() != xs[1]) fail(ErrorCode::kShape, "topk_pool: score vector length");
  const std::size_t n = xs[0];
  if (static_cast<std::size_t>(adjacency.rows()) != n || static_cast<std::size_t>(adjacency.cols()) != n) {
    fail(ErrorCode::kShape, "topk_pool: adjacency size");
  }
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-12));
  if (k == 0) fail(ErrorCode::kDomain, "topk_pool selected no vertices");

  // s = X p / ||p||
  const Var p_col = reshape(l2_normalize(p, 0.0), Shape{xs[1], 1});
  const Var scores = matmul(x, p_col);  // [N x 1]
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& sv = scores.value().data;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sv[a] > sv[b]; });
  order.resize(k);

  PoolResult r;
  r.indices = order;
  r.scores = scores.value();
  r.x = mul_rows(gather_rows(x, order), tanh(gather_rows(scores, order)));
  r.adjacency.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      r.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          adjacency(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j]));
    }
  }
  return r;
}

MultiHeadAttention MultiHeadAttention::create(ParamSet& params, const std::string& name, std::size_t d_model,
                                              std::size_t heads, Rng& rng) {
  if (heads == 0 || d_model % heads != 0) fail(ErrorCode::kConfig, "d_model must be divisible by n_heads");
  MultiHeadAttention m;
  m.q = Linear::create(params, name + ".q", d_model, d_model, rng);
  m.k = Linear::create(params, name + ".k", d_model, d_model, rng);
  m.v = Linear::create(params, name + ".v", d_model, d_model, rng);
  m.o = Linear::create(params, name + ".o", d_model, d_model, rng);
  m.heads = heads;
  return m;
}

Var MultiHeadAttention::operator()(const Var& queries, const Var& memory, std::vector<Var>* weights,
                                   Var* mixed) const {
  const std::size_t d = queries.shape().at(1);
  if (memory.shape().size() != 2 || memory.shape()[1] != d) fail(ErrorCode::kShape, "attention: width mismatch");
  const std::size_t dh = d / heads;
  const Var qq = q(queries);
  const Var kk = k(memory);
  const Var vv = v(memory);
  std::vector<Var> outs;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = slice_cols(qq, h * dh, (h + 1) * dh);
    const Var kh = slice_cols(kk, h * dh, (h + 1) * dh);
    const Var vh = slice_cols(vv, h * dh, (h + 1) * dh);
    const Var att = softmax_rows(affine(matmul(qh, transpose(kh)), scale, 0.0));
    if (weights != nullptr) weights->push_back(att);
    outs.push_back(matmul(att, vh));
  }
  const Var cat = concat(outs, 1);
  if (mixed != nullptr) *mixed = cat;
  return o(cat);
}

FeedForward FeedForward::create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t hidden,
                                Rng& rng) {
  return {Linear::create(params, name + ".up", d_model, hidden, rng),
          Linear::create(params, name + ".down", hidden, d_model, rng)};
}

EncoderLayer EncoderLayer::create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t heads,
                                  std::size_t hidden, Rng& rng) {
  EncoderLayer l;
  l.ln1 = LayerNorm::create(params, name + ".ln1", d_model);
  l.attn = MultiHeadAttention::create(params, name + ".attn", d_model, heads, rng);
  l.ln2 = LayerNorm::create(params, name + ".ln2", d_model);
  l.ffn = FeedForward::create(params, name + ".ffn", d_model, hidden, rng);
  return l;
}

Var EncoderLayer::operator()(const Var& x, std::vector<Var>* weights) const {
  const Var n1 = ln1(x);
  const Var h = add(x, attn(n1, n1, weights));
  return add(h, ffn(ln2(h)));
}

DecoderLayer DecoderLayer::create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t heads,
                                  std::size_t hidden, Rng& rng) {
  DecoderLayer l;
  l.ln1 = LayerNorm::create(params, name + ".ln1", d_model);
  l.self_attn = MultiHeadAttention::create(params, name + ".self", d_model, heads, rng);
  l.ln2 = LayerNorm::create(params, name + ".ln2", d_model);
  l.cross_attn = MultiHeadAttention::create(params, name + ".cross", d_model, heads, rng);
  l.ln3 = LayerNorm::create(params, name + ".ln3", d_model);
  l.ffn = FeedForward::create(params, name + ".ffn", d_model, hidden, rng);
  return l;
}

Var DecoderLayer::operator()(const Var& queries, const Var& memory, std::vector<Var>* cross_weights) const {
  const Var n1 = ln1(queries);
  const Var h1 = add(queries, self_attn(n1, n1));
  const Var h2 = add(h1, cross_attn(ln2(h1), memory, cross_weights));
  return add(h2, ffn(ln3(h2)));
}

Gru Gru::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
  Gru g;
  g.wx = params.add_glorot(name + ".wx", Shape{in, 3 * hidden}, in, hidden, rng);
  g.wh = params.add_glorot(name + ".wh", Shape{hidden, 3 * hidden}, hidden, hidden, rng);
  g.bx = params.add(name + ".bx", Tensor(Shape{3 * hidden}));
  g.bh = params.add(name + ".bh", Tensor(Shape{3 * hidden}));
  g.hidden = hidden;
  return g;
}

namespace {

Var gru_cell(const Var& xw, const Var& h, const Gru& g) {
  const std::size_t H = g.hidden;
  const Var hw = add_bias(matmul(h, g.wh), g.bh);
  const Var r = sigmoid(add(slice_cols(xw, 0, H), slice_cols(hw, 0, H)));
  const Var z = sigmoid(add(slice_cols(xw, H, 2 * H), slice_cols(hw, H, 2 * H)));
  const Var n = tanh(add(slice_cols(xw, 2 * H, 3 * H), mul(r, slice_cols(hw, 2 * H, 3 * H))));
  return add(mul(affine(z, -1.0, 1.0), n), mul(z, h));
}

}  // namespace

Var Gru::step(const Var& x, const Var& h) const { return gru_cell(add_bias(matmul(x, wx), bx), h, *this); }

Var Gru::operator()(const Var& sequence) const {
  const auto& s = sequence.shape();
  if (s.size() != 2 || s[1] != wx.shape()[0]) fail(ErrorCode::kShape, "gru: input width mismatch");
  const Var xw = add_bias(matmul(sequence, wx), bx);  // all steps at once
  Var h = Var::constant(Tensor(Shape{1, hidden}));
  for (std::size_t t = 0; t < s[0]; ++t) h = gru_cell(slice_rows(xw, t, t + 1), h, *this);
  return h;
}

Conv1d Conv1d::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                      std::size_t stride, Rng& rng) {
  Conv1d c;
  c.w = params.add_glorot(name + ".w", Shape{out, in, kernel}, in * kernel, out * kernel, rng);
  c.b = params.add(name + ".b", Tensor(Shape{out}));
  c.stride = stride;
  return c;
}

Conv2d Conv2d::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kh,
                      std::size_t kw, std::size_t stride_h, std::size_t stride_w, Rng& rng) {
  Conv2d c;
  c.w = params.add_glorot(name + ".w", Shape{out, in, kh, kw}, in * kh * kw, out * kh * kw, rng);
  c.b = params.add(name + ".b", Tensor(Shape{out}));
  c.stride_h = stride_h;
  c.stride_w = stride_w;
  return c;
}

Var frames_from_channels(const Var& x) {
  const auto& s = x.shape();
  if (s.size() != 3) fail(ErrorCode::kShape, "frames_from_channels expects [C x H x W]");
  const std::size_t C = s[0];
  const std::size_t H = s[1];
  const std::size_t W = s[2];
  // Permutation as a gather over a flattened view, so it reuses gather_rows' backward.
  std::vector<std::size_t> idx;
  idx.reserve(C * H * W);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t w = 0; w < W; ++w) idx.push_back((c * H + h) * W + w);
    }
  }
  const Var flat = reshape(x, Shape{C * H * W, 1});
  return reshape(gather_rows(flat, idx), Shape{H, C * W});
}

}  // namespace srir::nn
