#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles/oracles.hpp"
#include "srir/error.hpp"
#include "srir/nn/layers.hpp"
#include "srir/nn/model.hpp"
#include "srir/nn/train.hpp"
#include "srir/scene.hpp"

using namespace srir;
using namespace srir::nn;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = u(rng);
  return t;
}

oracle::Mat to_mat(const Tensor& t) {
  oracle::Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  }
  return m;
}

// x W + b, with W stored [in x out].
oracle::Mat affine_oracle(const oracle::Mat& x, const Linear& lin) {
  auto y = oracle::matmul(x, to_mat(lin.w.value()));
  for (auto& row : y) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += lin.b.value()[c];
  }
  return y;
}

oracle::Mat cols(const oracle::Mat& m, std::size_t b, std::size_t e) {
  oracle::Mat out;
  for (const auto& row : m) out.emplace_back(row.begin() + static_cast<long>(b), row.begin() + static_cast<long>(e));
  return out;
}

// Brute-force multi-head attention with contiguous head slices.
oracle::Mat mha_oracle(const MultiHeadAttention& mha, const oracle::Mat& queries, const oracle::Mat& memory,
                       std::vector<oracle::Mat>* weights = nullptr) {
  const auto q = affine_oracle(queries, mha.q);
  const auto k = affine_oracle(memory, mha.k);
  const auto v = affine_oracle(memory, mha.v);
  const std::size_t d = q[0].size();
  const std::size_t dh = d / mha.heads;
  oracle::Mat cat(q.size(), std::vector<double>(d));
  for (std::size_t h = 0; h < mha.heads; ++h) {
    oracle::Mat w;
    const auto out = oracle::attention(cols(q, h * dh, (h + 1) * dh), cols(k, h * dh, (h + 1) * dh),
                                       cols(v, h * dh, (h + 1) * dh), &w);
    if (weights != nullptr) weights->push_back(w);
    for (std::size_t r = 0; r < q.size(); ++r) {
      for (std::size_t c = 0; c < dh; ++c) cat[r][h * dh + c] = out[r][c];
    }
  }
  return affine_oracle(cat, mha.o);
}

void expect_mat_near(const Tensor& got, const oracle::Mat& want, double tol) {
  ASSERT_EQ(got.rows(), want.size());
  ASSERT_EQ(got.cols(), want[0].size());
  for (std::size_t r = 0; r < want.size(); ++r) {
    for (std::size_t c = 0; c < want[r].size(); ++c) EXPECT_NEAR(got.at(r, c), want[r][c], tol) << r << "," << c;
  }
}

Eigen::MatrixXd random_graph(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng() % 3 == 0) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      }
    }
  }
  return a;
}

}  // namespace

TEST(Gcn, SingleNodeSelfLoop) {
  const Var x = Var::constant(Tensor::matrix({{-1.0, 2.0}}));
  const Var a = Var::constant(Tensor::matrix({{1.0}}));
  const Var w = Var::constant(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
  const auto y = gcn_forward(x, a, w).value();
  EXPECT_EQ(y.data, (std::vector<double>{0.0, 2.0}));
}

TEST(Gcn, TwoNodePathMatchesHandProduct) {
  Eigen::MatrixXd adj(2, 2);
  adj << 0, 1, 1, 0;
  const Var a = normalized_adjacency_var(adj);
  // Each node has degree 2 with its self-loop, so every entry is 1/2.
  for (double v : a.value().data) EXPECT_DOUBLE_EQ(v, 0.5);
  const Var x = Var::constant(Tensor::matrix({{1.0, -2.0}, {3.0, 4.0}}));
  const Var w = Var::constant(Tensor::matrix({{1.0, 2.0, 0.0}, {0.5, -1.0, 1.0}}));
  const auto y = gcn_forward(x, a, w).value();
  // Mixed rows are both (2, 1); times W gives (2.5, 3, 1).
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_DOUBLE_EQ(y.at(r, 0), 2.5);
    EXPECT_DOUBLE_EQ(y.at(r, 1), 3.0);
    EXPECT_DOUBLE_EQ(y.at(r, 2), 1.0);
  }
}

TEST(Gcn, PermutationEquivariant) {
  const std::size_t n = 9;
  const auto adj = random_graph(n, 5);
  const Tensor x = random_tensor({n, 5}, 1);
  const Tensor w = random_tensor({5, 4}, 2);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));

  Eigen::MatrixXd padj(9, 9);
  Tensor px({n, 5});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      padj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          adj(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
    }
    for (std::size_t c = 0; c < 5; ++c) px.at(i, c) = x.at(perm[i], c);
  }
  const auto y = gcn_forward(Var::constant(x), normalized_adjacency_var(adj), Var::constant(w)).value();
  const auto py = gcn_forward(Var::constant(px), normalized_adjacency_var(padj), Var::constant(w)).value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(py.at(i, c), y.at(perm[i], c), 1e-9);
  }
}

TEST(Gcn, ShapeMismatchThrows) {
  const Var x = Var::constant(Tensor({3, 2}));
  const Var a = Var::constant(Tensor({2, 2}));
  const Var w = Var::constant(Tensor({2, 2}));
  EXPECT_THROW(gcn_forward(x, a, w), Error);
}

TEST(TopK, HandRanking) {
  // Scores are the first feature because p = (1, 0).
  const Var x = Var::constant(Tensor::matrix({{3.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}));
  const Var p = Var::constant(Tensor({2}, std::vector<double>{1.0, 0.0}));
  Eigen::MatrixXd adj = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
  const auto r = topk_pool(x, adj, 2.0 / 3.0, p);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(r.x.value().at(0, 0), 3.0 * std::tanh(3.0));
  EXPECT_DOUBLE_EQ(r.x.value().at(1, 0), 2.0 * std::tanh(2.0));
  EXPECT_EQ(r.adjacency.rows(), 2);
}

TEST(TopK, RatioOneKeepsEverythingGated) {
  const Tensor xt = random_tensor({6, 3}, 4);
  const Tensor pt = random_tensor({3}, 5);
  const auto r = topk_pool(Var::constant(xt), random_graph(6, 6), 1.0, Var::constant(pt));
  ASSERT_EQ(r.indices.size(), 6u);
  EXPECT_EQ(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size(), 6u);
  const double pn = std::sqrt(pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t src = r.indices[i];
    const double s = (xt.at(src, 0) * pt[0] + xt.at(src, 1) * pt[1] + xt.at(src, 2) * pt[2]) / pn;
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(r.x.value().at(i, c), xt.at(src, c) * std::tanh(s), 1e-12);
  }
}

TEST(TopK, TiesGoToLowerIndexAndSubgraphIsInduced) {
  const Var x = Var::constant(Tensor::matrix({{1.0}, {2.0}, {2.0}, {1.0}}));
  const Var p = Var::constant(Tensor({1}, std::vector<double>{1.0}));
  const auto r = topk_pool(x, random_graph(4, 1), 0.75, p);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{1, 2, 0}));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto adj = random_graph(8, seed);
    const auto res = topk_pool(Var::constant(random_tensor({8, 4}, seed + 10)), adj, 0.5,
                               Var::constant(random_tensor({4}, seed + 20)));
    ASSERT_EQ(res.indices.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(res.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  adj(static_cast<Eigen::Index>(res.indices[i]), static_cast<Eigen::Index>(res.indices[j])));
      }
    }
  }
}

TEST(TopK, SelectedSetIsPermutationCovariant) {
  const Tensor xt = random_tensor({10, 3}, 30);
  const Var p = Var::constant(random_tensor({3}, 31));
  const auto adj = random_graph(10, 32);
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(33));
  Tensor px({10, 3});
  Eigen::MatrixXd padj(10, 10);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 3; ++c) px.at(i, c) = xt.at(perm[i], c);
    for (std::size_t j = 0; j < 10; ++j) {
      padj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          adj(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
    }
  }
  const auto a = topk_pool(Var::constant(xt), adj, 0.6, p);
  const auto b = topk_pool(Var::constant(px), padj, 0.6, p);
  std::set<std::size_t> sa(a.indices.begin(), a.indices.end());
  std::set<std::size_t> sb;
  for (std::size_t i : b.indices) sb.insert(perm[i]);
  EXPECT_EQ(sa, sb);
}

TEST(TopK, InvalidRatio) {
  const Var x = Var::constant(Tensor({3, 1}, 1.0));
  const Var p = Var::constant(Tensor({1}, 1.0));
  const Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(topk_pool(x, adj, 0.0, p), Error);
  EXPECT_THROW(topk_pool(x, adj, 1.5, p), Error);
}

TEST(Attention, RowsSumToOne) {
  ParamSet params;
  Rng rng(7);
  const auto layer = EncoderLayer::create(params, "enc", 8, 2, 16, rng);
  std::vector<Var> weights;
  layer(Var::constant(random_tensor({5, 8}, 8)), &weights);
  ASSERT_EQ(weights.size(), 2u);
  for (const auto& w : weights) {
    for (std::size_t r = 0; r < w.value().rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < w.value().cols(); ++c) s += w.value().at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Attention, SingleTokenReturnsValueProjection) {
  ParamSet params;
  Rng rng(9);
  const auto mha = MultiHeadAttention::create(params, "a", 4, 2, rng);
  const Tensor x = random_tensor({1, 4}, 10);
  Var mixed;
  mha(Var::constant(x), Var::constant(x), nullptr, &mixed);
  expect_mat_near(mixed.value(), affine_oracle(to_mat(x), mha.v), 1e-12);
}

TEST(Attention, SelfAttentionMatchesBruteForce) {
  for (std::size_t heads : {1u, 2u}) {
    ParamSet params;
    Rng rng(11);
    const auto mha = MultiHeadAttention::create(params, "a", 4, heads, rng);
    const Tensor x = random_tensor({3, 4}, 12);
    std::vector<Var> weights;
    const auto y = mha(Var::constant(x), Var::constant(x), &weights).value();
    std::vector<oracle::Mat> want_w;
    expect_mat_near(y, mha_oracle(mha, to_mat(x), to_mat(x), &want_w), 1e-12);
    for (std::size_t h = 0; h < heads; ++h) expect_mat_near(weights[h].value(), want_w[h], 1e-12);
  }
}

TEST(Attention, EncoderLayerMatchesBruteForce) {
  ParamSet params;
  Rng rng(13);
  const auto layer = EncoderLayer::create(params, "enc", 4, 2, 6, rng);
  // Non-trivial layer norm parameters.
  layer.ln1.gamma.node()->value = random_tensor({4}, 14);
  layer.ln1.beta.node()->value = random_tensor({4}, 15);
  const Tensor x = random_tensor({3, 4}, 16);

  auto layer_norm = [](const oracle::Mat& m, const LayerNorm& ln) {
    oracle::Mat out = m;
    for (auto& row : out) {
      double mu = 0.0, var = 0.0;
      for (double v : row) mu += v / static_cast<double>(row.size());
      for (double v : row) var += (v - mu) * (v - mu) / static_cast<double>(row.size());
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = (row[c] - mu) / std::sqrt(var + 1e-5) * ln.gamma.value()[c] + ln.beta.value()[c];
      }
    }
    return out;
  };
  auto add_m = [](oracle::Mat a, const oracle::Mat& b) {
    for (std::size_t r = 0; r < a.size(); ++r) {
      for (std::size_t c = 0; c < a[r].size(); ++c) a[r][c] += b[r][c];
    }
    return a;
  };
  const auto xm = to_mat(x);
  const auto n1 = layer_norm(xm, layer.ln1);
  const auto h = add_m(xm, mha_oracle(layer.attn, n1, n1));
  auto up = affine_oracle(layer_norm(h, layer.ln2), layer.ffn.up);
  for (auto& row : up) {
    for (double& v : row) v = std::max(0.0, v);
  }
  const auto want = add_m(h, affine_oracle(up, layer.ffn.down));
  expect_mat_near(layer(Var::constant(x)).value(), want, 1e-12);
}

TEST(CrossAttention, MatchesBruteForce) {
  ParamSet params;
  Rng rng(17);
  const auto mha = MultiHeadAttention::create(params, "c", 4, 2, rng);
  const Tensor q = random_tensor({2, 4}, 18);
  const Tensor m = random_tensor({3, 4}, 19);
  expect_mat_near(mha(Var::constant(q), Var::constant(m)).value(), mha_oracle(mha, to_mat(q), to_mat(m)), 1e-12);
}

TEST(CrossAttention, IdenticalMemoryTokensGiveSameOutput) {
  ParamSet params;
  Rng rng(20);
  const auto mha = MultiHeadAttention::create(params, "c", 4, 2, rng);
  Tensor token = random_tensor({1, 4}, 21);
  Tensor memory({5, 4});
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 4; ++c) memory.at(r, c) = token.at(0, c);
  }
  const Tensor q = random_tensor({2, 4}, 22);
  const auto y = mha(Var::constant(q), Var::constant(memory)).value();
  const auto single = mha(Var::constant(q), Var::constant(token)).value();
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], single[i], 1e-12);
}

TEST(CrossAttention, IgnoredTokenDoesNotMatter) {
  ParamSet params;
  Rng rng(23);
  auto mha = MultiHeadAttention::create(params, "c", 2, 1, rng);
  const Tensor eye = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}});
  for (Linear* lin : {&mha.q, &mha.k, &mha.v, &mha.o}) {
    lin->w.node()->value = eye;
    lin->b.node()->value = Tensor({2});
  }
  const Var q = Var::constant(Tensor::matrix({{1.0, 0.0}}));
  Tensor mem = Tensor::matrix({{0.5, 1.0}, {0.2, -1.0}, {-100.0, 0.0}});
  const auto base = mha(q, Var::constant(mem)).value();
  mem.at(2, 1) = 5.0;  // same key logit, different value
  const auto moved = mha(q, Var::constant(mem)).value();
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_LT(std::abs(base[i] - moved[i]), 1e-6);
}

TEST(Gru, HandStepWidthTwo) {
  ParamSet params;
  Rng rng(1);
  Gru g = Gru::create(params, "g", 1, 2, rng);
  // Columns: r1 r2 z1 z2 n1 n2.
  g.wx.node()->value = Tensor({1, 6}, std::vector<double>{0.5, -0.3, 0.8, 0.1, -0.6, 0.9});
  g.wh.node()->value = Tensor({2, 6}, std::vector<double>{0.2, 0.4, -0.5, 0.3, 0.7, -0.2,  //
                                                          -0.1, 0.6, 0.2, -0.4, 0.3, 0.5});
  g.bx.node()->value = Tensor({6}, std::vector<double>{0.1, 0.0, -0.2, 0.3, 0.05, -0.1});
  g.bh.node()->value = Tensor({6}, std::vector<double>{0.0, 0.2, 0.1, -0.1, 0.4, 0.0});
  const double x = 1.5;
  const double h[2] = {0.3, -0.7};
  const auto& wx = g.wx.value().data;
  const auto& wh = g.wh.value().data;
  const auto& bx = g.bx.value().data;
  const auto& bh = g.bh.value().data;
  auto hw = [&](std::size_t col) { return h[0] * wh[col] + h[1] * wh[6 + col] + bh[col]; };
  double want[2];
  for (std::size_t j = 0; j < 2; ++j) {
    const double r = oracle::sigmoid(x * wx[j] + bx[j] + hw(j));
    const double z = oracle::sigmoid(x * wx[2 + j] + bx[2 + j] + hw(2 + j));
    const double n = std::tanh(x * wx[4 + j] + bx[4 + j] + r * hw(4 + j));
    want[j] = (1.0 - z) * n + z * h[j];
  }
  const auto got = g.step(Var::constant(Tensor::matrix({{x}})), Var::constant(Tensor::matrix({{h[0], h[1]}}))).value();
  EXPECT_NEAR(got[0], want[0], 1e-14);
  EXPECT_NEAR(got[1], want[1], 1e-14);
  // The sequence form from h0 = 0 equals one step from zeros.
  const auto seq = g(Var::constant(Tensor::matrix({{x}}))).value();
  const auto one = g.step(Var::constant(Tensor::matrix({{x}})), Var::constant(Tensor({1, 2}))).value();
  EXPECT_EQ(seq.data, one.data);
}

TEST(LorEncoder, ZeroInputZeroBiasGivesZeroEmbedding) {
  SrirModel model(ModelConfig::tiny(), 3);
  for (auto& [name, var] : model.params().entries()) {
    const bool lor_bias = (name.rfind("wave.", 0) == 0 || name.rfind("mel.", 0) == 0) &&
                          (name.ends_with(".b") || name.ends_with(".bx") || name.ends_with(".bh"));
    if (lor_bias) std::fill(var.mutable_value().data.begin(), var.mutable_value().data.end(), 0.0);
  }
  const auto& cfg = model.config();
  const Tensor wave({kAmbiChannels, cfg.lor_length});
  const Tensor mel({kAmbiChannels, cfg.mel_frames(), cfg.mel_n_mels});
  const auto emb = model.encode_lor(wave, mel).value();
  EXPECT_EQ(emb.shape, (Shape{1, cfg.lor_dim()}));
  for (double v : emb.data) EXPECT_EQ(v, 0.0);
}

TEST(LorEncoder, ShapeIndependentOfContent) {
  SrirModel model(ModelConfig::tiny(), 4);
  const auto& cfg = model.config();
  for (std::size_t pos : {std::size_t{0}, cfg.lor_length / 2, cfg.lor_length - 1}) {
    auto lor = AmbisonicIR::zeros(cfg.lor_length);
    lor.channels[1][pos] = 1.0;
    EXPECT_EQ(model.encode_lor(lor).shape(), (Shape{1, cfg.lor_dim()}));
  }
  EXPECT_THROW(model.encode_lor(Tensor({3, cfg.lor_length}), Tensor({4, cfg.mel_frames(), cfg.mel_n_mels})), Error);
}

TEST(PositionalEncoding, ZeroCoordinates) {
  const auto t = positional_encoding(PositionPair{}, 8, 20.0);
  ASSERT_EQ(t.size(), 96u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], i % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEncoding, InjectiveOnCentimetreGrid) {
  // One coordinate swept at 1 cm over 10 m, plus a coarse 3-D grid; the
  // encodings of distinct points must be pairwise distinct.
  std::vector<Tensor> enc;
  for (int i = 0; i <= 1000; ++i) {
    PositionPair p;
    p.source = {0.01 * i, 0.0, 0.0};
    enc.push_back(positional_encoding(p, 8, 20.0));
  }
  double min_d = 1e300;
  for (std::size_t i = 0; i + 1 < enc.size(); ++i) {
    for (std::size_t j = i + 1; j < enc.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < 16; ++k) d += (enc[i][k] - enc[j][k]) * (enc[i][k] - enc[j][k]);
      min_d = std::min(min_d, d);
    }
  }
  EXPECT_GT(min_d, 0.0);

  std::vector<Tensor> grid;
  for (int x = 0; x < 6; ++x) {
    for (int y = 0; y < 6; ++y) {
      for (int z = 0; z < 6; ++z) {
        PositionPair p;
        p.listener = {2.0 * x, 2.0 * y, 2.0 * z};
        p.source = {1.0, 1.0, 1.0};
        grid.push_back(positional_encoding(p, 8, 20.0));
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) EXPECT_NE(grid[i].data, grid[j].data);
  }
  PositionPair a{{1, 2, 3}, {4, 5, 6}};
  PositionPair b{{1.5, 2.5, 3.5}, {4.5, 5.5, 6.5}};
  EXPECT_NE(positional_encoding(a, 8, 20.0).data, positional_encoding(b, 8, 20.0).data);
}

TEST(GradCheck, LinearWithMse) {
  ParamSet params;
  Rng rng(40);
  const auto lin = Linear::create(params, "lin", 5, 3, rng);
  params.get("lin.b").node()->value = random_tensor({3}, 41);
  const Var x = Var::constant(random_tensor({4, 5}, 42));
  const Tensor target = random_tensor({4, 3}, 43);
  const auto report = grad_check(params, [&] { return mse_loss(lin(x), target); });
  EXPECT_EQ(report.checked, 18u);
  EXPECT_LT(report.max_rel_error, 1e-6) << report.worst_block;
}

TEST(GradCheck, SmoothLayers) {
  ParamSet params;
  Rng rng(50);
  const auto enc = EncoderLayer::create(params, "enc", 4, 2, 6, rng);
  const auto gru = Gru::create(params, "gru", 4, 3, rng);
  const auto conv = Conv1d::create(params, "conv", 2, 4, 3, 2, rng);
  for (auto& [name, var] : params.entries()) {
    if (name.ends_with(".b") || name.ends_with(".bx") || name.ends_with(".bh") || name.ends_with(".beta")) {
      var.node()->value = random_tensor(var.shape(), std::hash<std::string>{}(name), 0.3);
    }
  }
  const Var x = Var::constant(random_tensor({3, 4}, 51));
  const Var signal = Var::constant(random_tensor({2, 13}, 52));
  const Tensor target = random_tensor({1, 3}, 53);
  const auto report = grad_check(params, [&] {
    const Var a = enc(x);
    const Var c = transpose(tanh(conv(signal)));  // [6 x 4]
    const Var parts[2] = {a, c};
    return mse_loss(gru(concat(parts, 0)), target);
  });
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst_block << "[" << report.worst_index << "]";
}

TEST(GradCheck, NonFiniteGradientNamesBlock) {
  ParamSet params;
  params.add("bad", Tensor({1}, 1.0));
  const Var& p = params.get("bad");
  EXPECT_THROW(
      {
        try {
          grad_check(params, [&] {
            return custom_scalar(p, [](const Tensor& t, Tensor& g) {
              g = Tensor(t.shape, std::numeric_limits<double>::quiet_NaN());
              return t[0];
            });
          });
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kNumerical);
          EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
          throw;
        }
      },
      Error);
}
