#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "srir/nn/tensor.hpp"

namespace srir::nn {

struct Node;

/// Handle to a value in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  /// Leaf holding `value`; gradients are accumulated when `requires_grad`.
  static Var leaf(Tensor value, bool requires_grad = false);
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value() const;
  Tensor& mutable_value();
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape; }
  bool requires_grad() const;
  bool defined() const { return static_cast<bool>(node_); }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }

  /// Clears the accumulated gradient (parameters between steps).
  void zero_grad();

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;

  /// grad += g, allocating on first use.
  void accumulate(const Tensor& g);
  void accumulate(std::size_t index, double g);
  /// Allocates a zero gradient of the value's shape if missing.
  Tensor& grad_buffer();
};

/// Reverse-mode sweep from a scalar `loss` (seed gradient 1).
void backward(const Var& loss);

// --- elementwise ------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// a * x + b with constants a, b.
Var affine(const Var& x, double a, double b);
Var relu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
/// log(1 + e^x), overflow-safe.
Var softplus(const Var& x);

// --- matrix ---------------------------------------------------------------

/// [m x k] @ [k x n].
Var matmul(const Var& a, const Var& b);
/// Adds a length-n vector to every row of an [m x n] matrix.
Var add_bias(const Var& x, const Var& bias);
/// Scales row i of [m x n] by s[i] (s has m elements).
Var mul_rows(const Var& x, const Var& s);
Var transpose(const Var& x);
/// Same data, new shape with equal element count.
Var reshape(const Var& x, Shape shape);
Var softmax_rows(const Var& x);
/// Per-row normalization to zero mean / unit variance, then gamma * . + beta.
Var layernorm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
/// Concatenates rank-2 tensors along rows (axis 0) or columns (axis 1).
Var concat(std::span<const Var> parts, int axis);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

// --- reductions and normalizations ---------------------------------------------

Var sum(const Var& x);
Var mean(const Var& x);
/// x / (||x||_2 + eps) over all elements.
Var l2_normalize(const Var& x, double eps = 1e-8);

// --- convolutions (valid padding) --------------------------------------------

/// x [Cin x T], w [Cout x Cin x K], b [Cout] -> [Cout x ((T - K) / stride + 1)].
Var conv1d(const Var& x, const Var& w, const Var& b, std::size_t stride);
/// x [Cin x H x W], w [Cout x Cin x KH x KW], b [Cout] -> [Cout x Ho x Wo].
Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride_h, std::size_t stride_w);

// --- losses against constant targets ---------------------------------------

Var mse_loss(const Var& pred, const Tensor& target);
Var mae_loss(const Var& pred, const Tensor& target);

/// Wraps an externally computed scalar function f(x) with a known gradient:
/// `fn` returns the value and writes df/dx into its second argument.
Var custom_scalar(const Var& x, const std::function<double(const Tensor&, Tensor&)>& fn);

}  // namespace srir::nn
