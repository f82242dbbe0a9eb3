#include "srir/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "srir/error.hpp"

namespace srir::nn {
namespace {

Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(bw);
  }
  return Var(std::move(node));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) fail(ErrorCode::kShape, std::string(op) + ": expected a matrix, got " + shape_string(t.shape));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) {
    fail(ErrorCode::kShape, std::string(op) + ": shapes " + shape_string(a.shape) + " and " + shape_string(b.shape));
  }
}

template <class F>
Var unary(const Var& x, F f, std::function<void(Node&)> bw) {
  Tensor y(x.shape());
  const auto& xv = x.value().data;
  for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = f(xv[i]);
  return make(std::move(y), {x}, std::move(bw));
}

}  // namespace

// --- Var / Node -------------------------------------------------------------

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::mutable_value() { return node_->value; }
const Tensor& Var::grad() const { return node_->grad_buffer(); }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
void Var::zero_grad() { node_->grad = Tensor(); }

Tensor& Node::grad_buffer() {
  if (grad.data.size() != value.data.size()) grad = Tensor(value.shape, 0.0);
  return grad;
}

void Node::accumulate(const Tensor& g) {
  if (!requires_grad) return;
  Tensor& buf = grad_buffer();
  for (std::size_t i = 0; i < g.data.size(); ++i) buf.data[i] += g.data[i];
}

void Node::accumulate(std::size_t index, double g) {
  if (!requires_grad) return;
  grad_buffer().data[index] += g;
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) fail(ErrorCode::kShape, "backward needs a scalar loss");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS: recurrent graphs are thousands of nodes deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].node();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->accumulate(0, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.data.size() == n->value.data.size()) n->backward(*n);
  }
}

// --- elementwise ------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same(a.value(), b.value(), "add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.value().data[i];
  return make(std::move(y), {a, b}, [](Node& n) {
    n.parents[0].node()->accumulate(n.grad);
    n.parents[1].node()->accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a.value(), b.value(), "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] -= b.value().data[i];
  return make(std::move(y), {a, b}, [](Node& n) {
    n.parents[0].node()->accumulate(n.grad);
    Tensor neg = n.grad;
    for (double& v : neg.data) v = -v;
    n.parents[1].node()->accumulate(neg);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a.value(), b.value(), "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= b.value().data[i];
  return make(std::move(y), {a, b}, [](Node& n) {
    const auto& av = n.parents[0].value().data;
    const auto& bv = n.parents[1].value().data;
    Tensor ga(n.value.shape);
    Tensor gb(n.value.shape);
    for (std::size_t i = 0; i < av.size(); ++i) {
      ga.data[i] = n.grad.data[i] * bv[i];
      gb.data[i] = n.grad.data[i] * av[i];
    }
    n.parents[0].node()->accumulate(ga);
    n.parents[1].node()->accumulate(gb);
  });
}

Var affine(const Var& x, double a, double b) {
  return unary(
      x, [a, b](double v) { return a * v + b; },
      [a](Node& n) {
        Tensor g = n.grad;
        for (double& v : g.data) v *= a;
        n.parents[0].node()->accumulate(g);
      });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](Node& n) {
        Tensor g = n.grad;
        const auto& xv = n.parents[0].value().data;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          if (!(xv[i] > 0.0)) g.data[i] = 0.0;
        }
        n.parents[0].node()->accumulate(g);
      });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= 1.0 - n.value.data[i] * n.value.data[i];
        n.parents[0].node()->accumulate(g);
      });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= n.value.data[i] * (1.0 - n.value.data[i]);
        n.parents[0].node()->accumulate(g);
      });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](Node& n) {
        Tensor g = n.grad;
        const auto& xv = n.parents[0].value().data;
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= 1.0 / (1.0 + std::exp(-xv[i]));
        n.parents[0].node()->accumulate(g);
      });
}

// --- matrix ---------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  const std::size_t m = av.dim(0);
  const std::size_t k = av.dim(1);
  const std::size_t n = bv.dim(1);
  if (bv.dim(0) != k) {
    fail(ErrorCode::kShape, "matmul: " + shape_string(av.shape) + " @ " + shape_string(bv.shape));
  }
  Tensor y(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* yr = &y.data[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.data[i * k + p];
      if (aip == 0.0) continue;
      const double* br = &bv.data[p * n];
      for (std::size_t j = 0; j < n; ++j) yr[j] += aip * br[j];
    }
  }
  return make(std::move(y), {a, b}, [m, k, n](Node& node) {
    const Tensor& A = node.parents[0].value();
    const Tensor& B = node.parents[1].value();
    const Tensor& G = node.grad;
    if (node.parents[0].requires_grad()) {
      Tensor ga(A.shape);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G.data[i * n + j] * B.data[p * n + j];
          ga.data[i * k + p] = acc;
        }
      }
      node.parents[0].node()->accumulate(ga);
    }
    if (node.parents[1].requires_grad()) {
      Tensor gb(B.shape);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.data[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb.data[p * n + j] += aip * G.data[i * n + j];
        }
      }
      node.parents[1].node()->accumulate(gb);
    }
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  require_rank2(xv, "add_bias");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  if (bias.value().size() != n) fail(ErrorCode::kShape, "add_bias: bias length differs from column count");
  Tensor y = xv;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y.data[i * n + j] += bias.value().data[j];
  }
  return make(std::move(y), {x, bias}, [m, n](Node& node) {
    node.parents[0].node()->accumulate(node.grad);
    if (node.parents[1].requires_grad()) {
      Tensor gb(node.parents[1].shape());
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb.data[j] += node.grad.data[i * n + j];
      }
      node.parents[1].node()->accumulate(gb);
    }
  });
}

Var mul_rows(const Var& x, const Var& s) {
  const Tensor& xv = x.value();
  require_rank2(xv, "mul_rows");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  if (s.value().size() != m) fail(ErrorCode::kShape, "mul_rows: scale length differs from row count");
  Tensor y = xv;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y.data[i * n + j] *= s.value().data[i];
  }
  return make(std::move(y), {x, s}, [m, n](Node& node) {
    const Tensor& X = node.parents[0].value();
    const Tensor& S = node.parents[1].value();
    Tensor gx(X.shape);
    Tensor gs(S.shape);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = node.grad.data[i * n + j];
        gx.data[i * n + j] = g * S.data[i];
        gs.data[i] += g * X.data[i * n + j];
      }
    }
    node.parents[0].node()->accumulate(gx);
    node.parents[1].node()->accumulate(gs);
  });
}

Var transpose(const Var& x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "transpose");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  Tensor y(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y.data[j * m + i] = xv.data[i * n + j];
  }
  return make(std::move(y), {x}, [m, n](Node& node) {
    Tensor g(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g.data[i * n + j] = node.grad.data[j * m + i];
    }
    node.parents[0].node()->accumulate(g);
  });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_size(shape) != x.value().size()) {
    fail(ErrorCode::kShape, "reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  Tensor y(std::move(shape), x.value().data);
  return make(std::move(y), {x}, [](Node& node) { node.parents[0].node()->accumulate(node.grad); });
}

Var softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "softmax_rows");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  Tensor y(xv.shape);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = &xv.data[i * n];
    const double mx = *std::max_element(xr, xr + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (y.data[i * n + j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y.data[i * n + j] /= s;
  }
  return make(std::move(y), {x}, [m, n](Node& node) {
    Tensor g(node.value.shape);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += node.grad.data[i * n + j] * node.value.data[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        g.data[i * n + j] = node.value.data[i * n + j] * (node.grad.data[i * n + j] - dot);
      }
    }
    node.parents[0].node()->accumulate(g);
  });
}

Var layernorm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Tensor& xv = x.value();
  require_rank2(xv, "layernorm_rows");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  if (gamma.value().size() != n || beta.value().size() != n) fail(ErrorCode::kShape, "layernorm: gain/bias length");
  auto xhat = std::make_shared<Tensor>(xv.shape);
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  Tensor y(xv.shape);
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xv.data[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xv.data[i * n + j] - mu) * (xv.data[i * n + j] - mu);
    var /= static_cast<double>(n);
    (*inv_sigma)[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xv.data[i * n + j] - mu) * (*inv_sigma)[i];
      xhat->data[i * n + j] = h;
      y.data[i * n + j] = gamma.value().data[j] * h + beta.value().data[j];
    }
  }
  return make(std::move(y), {x, gamma, beta}, [m, n, xhat, inv_sigma](Node& node) {
    const Tensor& G = node.grad;
    const Tensor& gam = node.parents[1].value();
    Tensor gx(Shape{m, n});
    Tensor gg(gam.shape);
    Tensor gbeta(gam.shape);
    for (std::size_t i = 0; i < m; ++i) {
      double mean_gh = 0.0;
      double mean_ghx = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double g = G.data[i * n + j];
        const double h = xhat->data[i * n + j];
        gg.data[j] += g * h;
        gbeta.data[j] += g;
        mean_gh += g * gam.data[j];
        mean_ghx += g * gam.data[j] * h;
      }
      mean_gh /= static_cast<double>(n);
      mean_ghx /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double gh = G.data[i * n + j] * gam.data[j];
        gx.data[i * n + j] = (*inv_sigma)[i] * (gh - mean_gh - xhat->data[i * n + j] * mean_ghx);
      }
    }
    node.parents[0].node()->accumulate(gx);
    node.parents[1].node()->accumulate(gg);
    node.parents[2].node()->accumulate(gbeta);
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) fail(ErrorCode::kShape, "concat of nothing");
  if (axis != 0 && axis != 1) fail(ErrorCode::kShape, "concat axis must be 0 or 1");
  for (const Var& p : parts) require_rank2(p.value(), "concat");
  const std::size_t other = parts[0].value().dim(axis == 0 ? 1 : 0);
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.value().dim(axis == 0 ? 1 : 0) != other) fail(ErrorCode::kShape, "concat: mismatched extents");
    total += p.value().dim(static_cast<std::size_t>(axis));
  }
  Tensor y(axis == 0 ? Shape{total, other} : Shape{other, total});
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    offsets.push_back(off);
    if (axis == 0) {
      std::copy(v.data.begin(), v.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(off * other));
    } else {
      for (std::size_t i = 0; i < other; ++i) {
        for (std::size_t j = 0; j < v.dim(1); ++j) y.data[i * total + off + j] = v.data[i * v.dim(1) + j];
      }
    }
    off += v.dim(static_cast<std::size_t>(axis));
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return make(std::move(y), std::move(parents), [axis, offsets, other, total](Node& node) {
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const Var& p = node.parents[k];
      if (!p.requires_grad()) continue;
      Tensor g(p.shape());
      if (axis == 0) {
        std::copy_n(node.grad.data.begin() + static_cast<std::ptrdiff_t>(offsets[k] * other), g.data.size(),
                    g.data.begin());
      } else {
        const std::size_t w = p.shape()[1];
        for (std::size_t i = 0; i < other; ++i) {
          for (std::size_t j = 0; j < w; ++j) g.data[i * w + j] = node.grad.data[i * total + offsets[k] + j];
        }
      }
      p.node()->accumulate(g);
    }
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  require_rank2(xv, "slice_cols");
  const std::size_t m = xv.dim(0);
  const std::size_t n = xv.dim(1);
  if (begin >= end || end > n) fail(ErrorCode::kShape, "slice_cols out of range");
  const std::size_t w = end - begin;
  Tensor y(Shape{m, w});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < w; ++j) y.data[i * w + j] = xv.data[i * n + begin + j];
  }
  return make(std::move(y), {x}, [m, n, w, begin](Node& node) {
    Tensor g(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < w; ++j) g.data[i * n + begin + j] = node.grad.data[i * w + j];
    }
    node.parents[0].node()->accumulate(g);
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  require_rank2(xv, "slice_rows");
  const std::size_t n = xv.dim(1);
  if (begin >= end || end > xv.dim(0)) fail(ErrorCode::kShape, "slice_rows out of range");
  Tensor y(Shape{end - begin, n});
  std::copy(xv.data.begin() + static_cast<std::ptrdiff_t>(begin * n),
            xv.data.begin() + static_cast<std::ptrdiff_t>(end * n), y.data.begin());
  return make(std::move(y), {x}, [begin, n](Node& node) {
    const std::size_t base = begin * n;
    Node* p = node.parents[0].node();
    Tensor& g = p->grad_buffer();
    for (std::size_t i = 0; i < node.grad.data.size(); ++i) g.data[base + i] += node.grad.data[i];
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  require_rank2(xv, "gather_rows");
  const std::size_t n = xv.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor y(Shape{idx.size(), n});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= xv.dim(0)) fail(ErrorCode::kShape, "gather_rows index out of range");
    std::copy_n(xv.data.begin() + static_cast<std::ptrdiff_t>(idx[r] * n), n,
                y.data.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return make(std::move(y), {x}, [idx, n](Node& node) {
    Tensor& g = node.parents[0].node()->grad_buffer();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t j = 0; j < n; ++j) g.data[idx[r] * n + j] += node.grad.data[r * n + j];
    }
  });
}

// --- reductions -----------------------------------------------------------

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  return make(Tensor::scalar(s), {x}, [](Node& node) {
    Tensor g(node.parents[0].shape(), node.grad.data[0]);
    node.parents[0].node()->accumulate(g);
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return affine(sum(x), 1.0 / n, 0.0);
}

Var l2_normalize(const Var& x, double eps) {
  const Tensor& xv = x.value();
  double sq = 0.0;
  for (double v : xv.data) sq += v * v;
  const double norm = std::sqrt(sq);
  const double denom = norm + eps;
  Tensor y = xv;
  for (double& v : y.data) v /= denom;
  return make(std::move(y), {x}, [norm, denom](Node& node) {
    const Tensor& X = node.parents[0].value();
    double gx_dot = 0.0;
    for (std::size_t i = 0; i < X.data.size(); ++i) gx_dot += node.grad.data[i] * X.data[i];
    Tensor g(X.shape);
    const double coef = norm > 0.0 ? gx_dot / (denom * denom * norm) : 0.0;
    for (std::size_t i = 0; i < X.data.size(); ++i) g.data[i] = node.grad.data[i] / denom - X.data[i] * coef;
    node.parents[0].node()->accumulate(g);
  });
}

// --- convolutions -----------------------------------------------------------

Var conv1d(const Var& x, const Var& w, const Var& b, std::size_t stride) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.rank() != 2 || W.rank() != 3 || W.dim(1) != X.dim(0) || b.value().size() != W.dim(0) || stride == 0) {
    fail(ErrorCode::kShape, "conv1d: input " + shape_string(X.shape) + ", kernel " + shape_string(W.shape));
  }
  const std::size_t cin = X.dim(0);
  const std::size_t t_in = X.dim(1);
  const std::size_t cout = W.dim(0);
  const std::size_t k = W.dim(2);
  if (t_in < k) fail(ErrorCode::kShape, "conv1d: input shorter than kernel");
  const std::size_t t_out = (t_in - k) / stride + 1;
  Tensor y(Shape{cout, t_out});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t t = 0; t < t_out; ++t) {
      double acc = b.value().data[o];
      for (std::size_t i = 0; i < cin; ++i) {
        const double* xr = &X.data[i * t_in + t * stride];
        const double* wr = &W.data[(o * cin + i) * k];
        for (std::size_t q = 0; q < k; ++q) acc += wr[q] * xr[q];
      }
      y.data[o * t_out + t] = acc;
    }
  }
  return make(std::move(y), {x, w, b}, [cin, t_in, cout, k, t_out, stride](Node& node) {
    const Tensor& X = node.parents[0].value();
    const Tensor& W = node.parents[1].value();
    const Tensor& G = node.grad;
    Tensor gx(X.shape);
    Tensor gw(W.shape);
    Tensor gb(Shape{cout});
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t t = 0; t < t_out; ++t) {
        const double g = G.data[o * t_out + t];
        if (g == 0.0) continue;
        gb.data[o] += g;
        for (std::size_t i = 0; i < cin; ++i) {
          const std::size_t xo = i * t_in + t * stride;
          const std::size_t wo = (o * cin + i) * k;
          for (std::size_t q = 0; q < k; ++q) {
            gw.data[wo + q] += g * X.data[xo + q];
            gx.data[xo + q] += g * W.data[wo + q];
          }
        }
      }
    }
    node.parents[0].node()->accumulate(gx);
    node.parents[1].node()->accumulate(gw);
    node.parents[2].node()->accumulate(gb);
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride_h, std::size_t stride_w) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.rank() != 3 || W.rank() != 4 || W.dim(1) != X.dim(0) || b.value().size() != W.dim(0) || stride_h == 0 ||
      stride_w == 0) {
    fail(ErrorCode::kShape, "conv2d: input " + shape_string(X.shape) + ", kernel " + shape_string(W.shape));
  }
  const std::size_t cin = X.dim(0);
  const std::size_t h_in = X.dim(1);
  const std::size_t w_in = X.dim(2);
  const std::size_t cout = W.dim(0);
  const std::size_t kh = W.dim(2);
  const std::size_t kw = W.dim(3);
  if (h_in < kh || w_in < kw) fail(ErrorCode::kShape, "conv2d: input smaller than kernel");
  const std::size_t h_out = (h_in - kh) / stride_h + 1;
  const std::size_t w_out = (w_in - kw) / stride_w + 1;
  Tensor y(Shape{cout, h_out, w_out});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t r = 0; r < h_out; ++r) {
      for (std::size_t c = 0; c < w_out; ++c) {
        double acc = b.value().data[o];
        for (std::size_t i = 0; i < cin; ++i) {
          for (std::size_t p = 0; p < kh; ++p) {
            const double* xr = &X.data[(i * h_in + r * stride_h + p) * w_in + c * stride_w];
            const double* wr = &W.data[((o * cin + i) * kh + p) * kw];
            for (std::size_t q = 0; q < kw; ++q) acc += wr[q] * xr[q];
          }
        }
        y.data[(o * h_out + r) * w_out + c] = acc;
      }
    }
  }
  return make(std::move(y), {x, w, b}, [=](Node& node) {
    const Tensor& Xv = node.parents[0].value();
    const Tensor& Wv = node.parents[1].value();
    const Tensor& G = node.grad;
    Tensor gx(Xv.shape);
    Tensor gw(Wv.shape);
    Tensor gb(Shape{cout});
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t r = 0; r < h_out; ++r) {
        for (std::size_t c = 0; c < w_out; ++c) {
          const double g = G.data[(o * h_out + r) * w_out + c];
          if (g == 0.0) continue;
          gb.data[o] += g;
          for (std::size_t i = 0; i < cin; ++i) {
            for (std::size_t p = 0; p < kh; ++p) {
              const std::size_t xo = (i * h_in + r * stride_h + p) * w_in + c * stride_w;
              const std::size_t wo = ((o * cin + i) * kh + p) * kw;
              for (std::size_t q = 0; q < kw; ++q) {
                gw.data[wo + q] += g * Xv.data[xo + q];
                gx.data[xo + q] += g * Wv.data[wo + q];
              }
            }
          }
        }
      }
    }
    node.parents[0].node()->accumulate(gx);
    node.parents[1].node()->accumulate(gw);
    node.parents[2].node()->accumulate(gb);
  });
}

// --- losses -----------------------------------------------------------------

Var mse_loss(const Var& pred, const Tensor& target) {
  require_same(pred.value(), target, "mse_loss");
  const std::size_t n = target.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value().data[i] - target.data[i];
    acc += d * d;
  }
  auto t = std::make_shared<Tensor>(target);
  return make(Tensor::scalar(acc / static_cast<double>(n)), {pred}, [t, n](Node& node) {
    const Tensor& P = node.parents[0].value();
    Tensor g(P.shape);
    const double s = 2.0 * node.grad.data[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) g.data[i] = s * (P.data[i] - t->data[i]);
    node.parents[0].node()->accumulate(g);
  });
}

Var mae_loss(const Var& pred, const Tensor& target) {
  require_same(pred.value(), target, "mae_loss");
  const std::size_t n = target.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(pred.value().data[i] - target.data[i]);
  auto t = std::make_shared<Tensor>(target);
  return make(Tensor::scalar(acc / static_cast<double>(n)), {pred}, [t, n](Node& node) {
    const Tensor& P = node.parents[0].value();
    Tensor g(P.shape);
    const double s = node.grad.data[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = P.data[i] - t->data[i];
      g.data[i] = d > 0.0 ? s : (d < 0.0 ? -s : 0.0);
    }
    node.parents[0].node()->accumulate(g);
  });
}

Var custom_scalar(const Var& x, const std::function<double(const Tensor&, Tensor&)>& fn) {
  auto grad = std::make_shared<Tensor>(x.shape());
  const double v = fn(x.value(), *grad);
  return make(Tensor::scalar(v), {x}, [grad](Node& node) {
    Tensor g = *grad;
    for (double& e : g.data) e *= node.grad.data[0];
    node.parents[0].node()->accumulate(g);
  });
}

}  // namespace srir::nn
