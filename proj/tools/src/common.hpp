#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "srir/dataset.hpp"
#include "srir/error.hpp"
#include "srir/scene.hpp"

namespace srirkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // file and input-data errors
inline constexpr int kExitUsage = 2;    // bad flags or option values
inline constexpr int kExitInternal = 70;

/// Invalid flag value detected after parsing (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  bool json = false;
  std::optional<std::uint64_t> seed_flag;
  std::string config_path;
  /// Built-in defaults with the --config file merged on top.
  nlohmann::json config;

  void load_config();
  std::uint64_t seed() const;
  const nlohmann::json& section(const char* name) const;

  /// With --json prints `summary` as one JSON document, otherwise `human`.
  void emit(const nlohmann::json& summary, const std::string& human) const;
};

/// A parsed subcommand and the action bound to it.
struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

using Registry = std::vector<Command>;

void register_signal_commands(CLI::App& app, Context& ctx, Registry& out);
void register_learning_commands(CLI::App& app, Context& ctx, Registry& out);
void register_bench_command(CLI::App& app, Context& ctx, Registry& out);

/// "x,y,z" in metres.
srir::Vec3 parse_vec3(const std::string& text, const std::string& flag);
/// "lo,hi".
srir::Range parse_range(const std::string& text, const std::string& flag);

/// --scene (JSON document or shoebox shorthand) or --mesh/--materials.
struct SceneArgs {
  std::string scene;
  std::string mesh;
  std::string materials;

  void add_to(CLI::App* app, bool required = true);
  bool given() const { return !scene.empty() || !mesh.empty(); }
  srir::SceneGraph load() const;
};

int exit_code_for(srir::ErrorCode code);

std::string format_ms(double ms);

}  // namespace srirkit
