#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "srir/nn/autograd.hpp"

namespace srir::nn {

/// Named trainable tensors, in registration order.
class ParamSet {
 public:
  /// Registers a trainable leaf; names must be unique.
  Var add(const std::string& name, Tensor value);
  /// Glorot-uniform matrix / kernel with the given fan-in and fan-out.
  Var add_glorot(const std::string& name, Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Var>>& entries() { return entries_; }
  const Var& get(const std::string& name) const;
  std::size_t count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// y = x W + b for row-major inputs [m x in].
struct Linear {
  Var w;  // [in x out]
  Var b;  // [out]

  static Linear create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(const Var& x) const { return add_bias(matmul(x, w), b); }
};

struct LayerNorm {
  Var gamma;
  Var beta;

  static LayerNorm create(ParamSet& params, const std::string& name, std::size_t dim);
  Var operator()(const Var& x) const { return layernorm_rows(x, gamma, beta); }
};

// --- graph layers -------------------------------------------------------------

/// relu(A_norm X W): one graph convolution with a precomputed normalized adjacency.
Var gcn_forward(const Var& x, const Var& a_norm, const Var& w);

struct PoolResult {
  Var x;                             // [K x d], gated
  Eigen::MatrixXd adjacency;         // induced binary adjacency [K x K]
  std::vector<std::size_t> indices;  // kept rows, in descending score order
  Tensor scores;                     // all N scores
};

/// Top-K pooling: scores s = X p / ||p||, keep K = ceil(ratio N) rows by
/// descending score (ties to the lower index), gate them by tanh(s) and keep
/// the induced subgraph.
PoolResult topk_pool(const Var& x, const Eigen::MatrixXd& adjacency, double ratio, const Var& p);

/// Constant tensor of D^-1/2 (A + I) D^-1/2.
Var normalized_adjacency_var(const Eigen::MatrixXd& adjacency);

// --- attention ------------------------------------------------------------------

struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParamSet& params, const std::string& name, std::size_t d_model,
                                   std::size_t heads, Rng& rng);
  /// queries [Q x d], keys/values from `memory` [K x d]. When `weights` is
  /// non-null it receives one [Q x K] attention matrix per head. When `mixed`
  /// is non-null it receives the concatenated per-head outputs before the
  /// output projection.
  Var operator()(const Var& queries, const Var& memory, std::vector<Var>* weights = nullptr,
                 Var* mixed = nullptr) const;
};

struct FeedForward {
  Linear up, down;

  static FeedForward create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t hidden,
                            Rng& rng);
  Var operator()(const Var& x) const { return down(relu(up(x))); }
};

/// Pre-norm encoder layer: x + MHA(LN x), then + FFN(LN x).
struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ffn;

  static EncoderLayer create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t heads,
                             std::size_t hidden, Rng& rng);
  Var operator()(const Var& x, std::vector<Var>* weights = nullptr) const;
};

/// Pre-norm decoder layer: self-attention, cross-attention to memory, FFN.
struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;

  static DecoderLayer create(ParamSet& params, const std::string& name, std::size_t d_model, std::size_t heads,
                             std::size_t hidden, Rng& rng);
  Var operator()(const Var& queries, const Var& memory, std::vector<Var>* cross_weights = nullptr) const;
};

// --- recurrent / convolutional -----------------------------------------------

/// Gated recurrent unit, gate order (reset, update, candidate):
///   r = sigmoid(x Wr + br + h Ur + cr), z = sigmoid(x Wz + bz + h Uz + cz),
///   n = tanh(x Wn + bn + r * (h Un + cn)), h' = (1 - z) * n + z * h.
struct Gru {
  Var wx;  // [in x 3H]
  Var wh;  // [H x 3H]
  Var bx;  // [3H]
  Var bh;  // [3H]
  std::size_t hidden = 0;

  static Gru create(ParamSet& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);
  /// Runs over the rows of `sequence` [T x in] from h0 = 0; returns the final state [1 x H].
  Var operator()(const Var& sequence) const;
  /// One step from state h [1 x H] with input x [1 x in].
  Var step(const Var& x, const Var& h) const;
};

struct Conv1d {
  Var w;  // [out x in x k]
  Var b;  // [out]
  std::size_t stride = 1;

  static Conv1d create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                       std::size_t stride, Rng& rng);
  Var operator()(const Var& x) const { return conv1d(x, w, b, stride); }
};

struct Conv2d {
  Var w;  // [out x in x kh x kw]
  Var b;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;

  static Conv2d create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kh,
                       std::size_t kw, std::size_t stride_h, std::size_t stride_w, Rng& rng);
  Var operator()(const Var& x) const { return conv2d(x, w, b, stride_h, stride_w); }
};

/// [C x H x W] -> [H x C*W]: one row per frame with all channels side by side.
Var frames_from_channels(const Var& x);

}  // namespace srir::nn
