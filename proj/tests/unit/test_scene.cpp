#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "oracles/oracles.hpp"
#include "srir/error.hpp"
#include "srir/scene.hpp"

using namespace srir;

namespace {

MaterialLibrary one_material(const std::string& name, double refl) {
  return {{name, Material{uniform_bands(refl), uniform_bands(0.1)}}};
}

const char* kCubeObj = R"(# unit cube, two triangles per side
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no srir::Error thrown";
  return ErrorCode::kIo;
}

// Random mesh: a jittered height field over a grid, first `n` triangles.
SceneGraph random_mesh(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  std::vector<Vec3> verts;
  const std::size_t side = 5;
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      verts.push_back({static_cast<double>(i) + jitter(rng), static_cast<double>(j) + jitter(rng), jitter(rng)});
    }
  }
  std::vector<Triangle> tris;
  for (std::size_t i = 0; i + 1 < side && tris.size() < n; ++i) {
    for (std::size_t j = 0; j + 1 < side && tris.size() < n; ++j) {
      const std::size_t a = i * side + j, b = a + 1, c = a + side, d = c + 1;
      Material m{uniform_bands(0.5), uniform_bands(0.2)};
      tris.push_back({{a, c, b}, m, "m"});
      if (tris.size() < n) tris.push_back({{b, c, d}, m, "m"});
    }
  }
  return {std::move(verts), std::move(tris)};
}

double largest_eigenvalue_power(const Eigen::MatrixXd& m) {
  // Shift by +1 so the dominant eigenvalue is the largest one (spectrum in [-1, 1]).
  const Eigen::MatrixXd s = m + Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd w = s * v;
    lambda = w.norm() / v.norm();
    v = w / w.norm();
  }
  return lambda - 1.0;
}

}  // namespace

TEST(LoadScene, SingleTriangleHasNoNeighbours) {
  std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const auto g = parse_obj(obj, one_material("default", 0.7));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.adjacency().sum(), 0.0);
}

TEST(LoadScene, CubeFacesHaveThreeNeighbours) {
  std::istringstream obj(kCubeObj);
  const auto g = parse_obj(obj, one_material("default", 0.7));
  ASSERT_EQ(g.size(), 12u);
  const Eigen::MatrixXd a = g.adjacency();
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(g.neighbors(i).size(), 3u) << "face " << i;
    EXPECT_EQ(a(i, i), 0.0);
  }
  EXPECT_TRUE(a.isApprox(a.transpose()));
}

TEST(LoadScene, UnknownMaterialNamesIt) {
  std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nusemtl steel\nf 1 2 3\n");
  try {
    parse_obj(obj, one_material("wood", 0.5));
    FAIL() << "expected a reference error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kReference);
    EXPECT_NE(std::string(e.what()).find("steel"), std::string::npos);
  }
}

TEST(LoadScene, MalformedLineReportsLineNumber) {
  std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 x 0\nf 1 2 3\n");
  try {
    parse_obj(obj, one_material("default", 0.5));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(LoadScene, QuadIsUnsupported) {
  std::istringstream obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(code_of([&] { parse_obj(obj, one_material("default", 0.5)); }), ErrorCode::kUnsupportedGeometry);
}

TEST(LoadScene, FaceGeometryInvariants) {
  const auto g = random_mesh(20, 3);
  for (const auto& f : g.faces()) {
    EXPECT_NEAR(norm(f.normal), 1.0, 1e-9);
    const double area = 0.5 * norm(cross(f.vertices[1] - f.vertices[0], f.vertices[2] - f.vertices[0]));
    EXPECT_NEAR(f.area, area, 1e-9 * area);
    EXPECT_GT(f.area, 0.0);
  }
}

TEST(LoadScene, ScalarMaterialBroadcasts) {
  const auto lib = parse_materials(nlohmann::json::parse(R"({"plaster": {"reflectivity": 0.6, "scattering": 0.25}})"));
  const auto& m = lib.at("plaster");
  for (std::size_t b = 0; b < kNumBands; ++b) {
    EXPECT_EQ(m.reflectivity[b], 0.6);
    EXPECT_EQ(m.scattering[b], 0.25);
  }
}

TEST(LoadScene, ObjAndJsonRoundTrips) {
  std::istringstream obj(kCubeObj);
  const auto g = parse_obj(obj, one_material("default", 0.7));
  std::ostringstream out;
  const auto lib = write_obj(g, out);
  std::istringstream back(out.str());
  const auto h = parse_obj(back, lib);
  const auto k = scene_from_json(scene_to_json(g));
  for (const SceneGraph* other : {&h, &k}) {
    ASSERT_EQ(other->size(), g.size());
    EXPECT_EQ(other->adjacency(), g.adjacency());
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(other->face(i).vertices[v], g.face(i).vertices[v]);
      EXPECT_EQ(other->face(i).reflectivity, g.face(i).reflectivity);
      EXPECT_EQ(other->face(i).scattering, g.face(i).scattering);
    }
  }
}

TEST(LoadScene, RelabelingPermutesAdjacency) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = random_mesh(10, 100 + trial);
    std::vector<std::size_t> perm(g.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto h = g.permuted(perm);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (std::size_t k = 0; k < perm.size(); ++k) p(k, perm[k]) = 1.0;
    EXPECT_EQ(h.adjacency(), p * g.adjacency() * p.transpose());
  }
}

TEST(Shoebox, ConstructionAndAreas) {
  const auto g = make_shoebox({4, 3, 2.5}, uniform_bands(0.9), uniform_bands(0.1));
  ASSERT_EQ(g.size(), 12u);
  EXPECT_EQ(g.bounding_box().min, (Vec3{0, 0, 0}));
  EXPECT_EQ(g.bounding_box().max, (Vec3{4, 3, 2.5}));
  double total = 0.0;
  const Vec3 centre{2, 1.5, 1.25};
  for (const auto& f : g.faces()) {
    total += f.area;
    EXPECT_GT(dot(f.normal, centre - f.centroid), 0.0) << "normal must point inward";
    for (double r : f.reflectivity) EXPECT_EQ(r, 0.9);
  }
  EXPECT_NEAR(total, 2.0 * (4 * 3 + 4 * 2.5 + 3 * 2.5), 1e-12);
  EXPECT_TRUE(detect_shoebox(g).has_value());
}

TEST(Shoebox, NonPositiveDimensionIsDomainError) {
  EXPECT_EQ(code_of([] { make_shoebox({4, 0, 2}, uniform_bands(0.9), uniform_bands(0.1)); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { make_shoebox({-1, 3, 2}, uniform_bands(0.9), uniform_bands(0.1)); }), ErrorCode::kDomain);
}

TEST(NormalizeAdjacency, HandValues) {
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_EQ(normalize_adjacency(one, true)(0, 0), 1.0);
  Eigen::MatrixXd two(2, 2);
  two << 0, 1, 1, 0;
  const Eigen::MatrixXd n = normalize_adjacency(two, true);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(n(i, j), 0.5);
  }
}

TEST(NormalizeAdjacency, IsolatedVertexWithoutSelfLoops) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  try {
    normalize_adjacency(a, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegreeZero);
    EXPECT_NE(std::string(e.what()).find("vertex 2"), std::string::npos);
  }
}

TEST(NormalizeAdjacency, SpectrumBoundedByOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 32);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng() % 3 == 0) a(i, j) = a(j, i) = 1.0;
      }
    }
    const Eigen::MatrixXd m = normalize_adjacency(a, true);
    EXPECT_TRUE(m.isApprox(m.transpose(), 1e-15));
    if (n <= 8) {
      oracle::Mat rows(n, std::vector<double>(n));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) rows[i][j] = m(i, j);
      }
      EXPECT_LE(oracle::jacobi_eigen(rows).values.front(), 1.0 + 1e-9);
    }
    EXPECT_LE(largest_eigenvalue_power(m), 1.0 + 1e-9);
  }
}
