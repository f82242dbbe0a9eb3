#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srir/nn/model.hpp"
#include "srir/scene.hpp"

namespace srir {

struct BenchRow {
  std::string stage;
  double mean_ms = 0.0;
  double p95_ms = 0.0;  // nearest-rank 95th percentile
  std::size_t runs = 0;
};

/// Published per-module timings quoted next to local results for context.
struct ReferenceTiming {
  const char* stage;
  double ms;
};
inline constexpr ReferenceTiming kReferenceTimings[] = {{"GA-LoR", 310.09}, {"DL-model", 88.97}, {"PS", 86.43}};

struct BenchReport {
  std::vector<BenchRow> rows;  // GA-LoR, DL-model, PS, end-to-end
  std::size_t faces = 0;
  std::size_t model_parameters = 0;
  nlohmann::json machine;

  const BenchRow& row(const std::string& stage) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct BenchOptions {
  std::size_t warmup = 3;
  std::size_t runs = 10;
  int lor_order = 2;
  std::uint64_t seed = 0;
};

/// Mean and nearest-rank p95 of `samples` (milliseconds).
BenchRow summarize_timings(const std::string& stage, std::vector<double> samples);

/// Times LoR simulation, model inference (input preparation, forward pass,
/// parameter conversion) and parameter synthesis separately, then the three
/// in sequence. Throws kConfig when runs < 10.
BenchReport run_bench(const SceneGraph& scene, const PositionPair& pair, const nn::SrirModel& model,
                      const BenchOptions& options);

/// Shoebox of 20 x 15 x 4 m with enough furniture boxes for at least
/// `min_faces` faces, plus a position pair above the furniture.
std::pair<SceneGraph, PositionPair> bench_scene(std::size_t min_faces, std::uint64_t seed);

nlohmann::json machine_info();

}  // namespace srir
