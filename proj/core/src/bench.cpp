#include "srir/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "srir/error.hpp"
#include "srir/image_source.hpp"
#include "srir/param_synth.hpp"

namespace srir {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
std::vector<double> time_runs(std::size_t warmup, std::size_t runs, F&& f) {
  for (std::size_t i = 0; i < warmup; ++i) f();
  std::vector<double> ms;
  ms.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto t0 = Clock::now();
    f();
    ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return ms;
}

}  // namespace

const BenchRow& BenchReport::row(const std::string& stage) const {
  for (const auto& r : rows) {
    if (r.stage == stage) return r;
  }
  fail(ErrorCode::kReference, "no bench row " + stage);
}

BenchRow summarize_timings(const std::string& stage, std::vector<double> samples) {
  if (samples.empty()) fail(ErrorCode::kDomain, "no timing samples");
  BenchRow r;
  r.stage = stage;
  r.runs = samples.size();
  r.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  r.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  return r;
}

nlohmann::json machine_info() {
  nlohmann::json j;
  char host[256] = {};
  if (gethostname(host, sizeof host - 1) == 0) j["host"] = host;
  std::ifstream cpu("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpu, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) j["cpu"] = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  j["hardware_threads"] = std::thread::hardware_concurrency();
#if defined(__VERSION__)
  j["compiler"] = __VERSION__;
#endif
#if defined(NDEBUG)
  j["optimized"] = true;
#else
  j["optimized"] = false;
#endif
  return j;
}

std::pair<SceneGraph, PositionPair> bench_scene(std::size_t min_faces, std::uint64_t seed) {
  const Vec3 dims{20.0, 15.0, 4.0};
  const std::size_t obstacles = min_faces > 12 ? (min_faces - 12 + 11) / 12 : 0;
  SceneGraph g = make_furnished_room(dims, obstacles, seed, uniform_bands(0.8), uniform_bands(0.2));
  // Furniture is at most 0.3 + 0.5 * height tall, so these points are free.
  const PositionPair pair{{0.25 * dims.x, 0.3 * dims.y, 0.9 * dims.z}, {0.7 * dims.x, 0.6 * dims.y, 0.85 * dims.z}};
  return {std::move(g), pair};
}

BenchReport run_bench(const SceneGraph& scene, const PositionPair& pair, const nn::SrirModel& model,
                      const BenchOptions& options) {
  if (options.runs < 10) fail(ErrorCode::kConfig, "bench needs at least 10 timed runs");
  validate_pair(scene, pair);
  const double fs = model.config().sample_rate;
  const LorOrder order{options.lor_order};

  BenchReport report;
  report.faces = scene.size();
  report.model_parameters = model.params().count();
  report.machine = machine_info();

  AmbisonicIR lor;
  report.rows.push_back(summarize_timings(
      "GA-LoR", time_runs(options.warmup, options.runs, [&] { lor = compute_lor(scene, pair, order, fs); })));

  PerceptualParams params;
  report.rows.push_back(summarize_timings("DL-model", time_runs(options.warmup, options.runs, [&] {
                                            const nn::ModelInput in = nn::make_input(scene, pair, lor, model.config());
                                            params = model.to_params(model.forward(in));
                                          })));

  std::size_t out_len = 0;
  report.rows.push_back(summarize_timings("PS", time_runs(options.warmup, options.runs, [&] {
                                            out_len = synthesize(params, lor, options.seed).length();
                                          })));

  report.rows.push_back(summarize_timings("end-to-end", time_runs(options.warmup, options.runs, [&] {
                                            const AmbisonicIR l = compute_lor(scene, pair, order, fs);
                                            const nn::ModelInput in = nn::make_input(scene, pair, l, model.config());
                                            const PerceptualParams p = model.to_params(model.forward(in));
                                            out_len = synthesize(p, l, options.seed).length();
                                          })));
  return report;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"stage", r.stage}, {"mean_ms", r.mean_ms}, {"p95_ms", r.p95_ms}, {"runs", r.runs}});
  }
  nlohmann::json ref = nlohmann::json::object();
  for (const auto& t : kReferenceTimings) ref[t.stage] = t.ms;
  return {{"rows", rows_json},
          {"faces", faces},
          {"model_parameters", model_parameters},
          {"machine", machine},
          {"published_reference_ms", ref},
          {"note", "published timings come from different hardware and a full-size model; not a pass/fail"}};
}

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "scene faces: " << faces << ", model parameters: " << model_parameters << '\n';
  os << "stage         mean_ms     p95_ms  runs  published_ms\n";
  for (const auto& r : rows) {
    os << r.stage << std::string(r.stage.size() < 12 ? 12 - r.stage.size() : 1, ' ');
    os.width(9);
    os << r.mean_ms << "  ";
    os.width(9);
    os << r.p95_ms << "  ";
    os.width(4);
    os << r.runs << "  ";
    bool found = false;
    for (const auto& t : kReferenceTimings) {
      if (r.stage == t.stage) {
        os << t.ms;
        found = true;
      }
    }
    if (!found) os << '-';
    os << '\n';
  }
  os << "NOTE: published_ms values were measured on different hardware with a full-size model;\n"
        "      they are context only, not a pass/fail threshold.\n";
  return os.str();
}

}  // namespace srir
