#include "common.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "srirkit_defaults.hpp"

namespace srirkit {

void Context::load_config() {
  config = nlohmann::json::parse(kDefaultsJson);
  if (config_path.empty()) return;
  std::ifstream is(config_path);
  if (!is) srir::fail(srir::ErrorCode::kIo, "cannot open config file " + config_path);
  nlohmann::json patch;
  try {
    patch = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    srir::fail(srir::ErrorCode::kParse, config_path + ": " + e.what());
  }
  if (!patch.is_object()) srir::fail(srir::ErrorCode::kConfig, config_path + ": top level must be an object");
  config.merge_patch(patch);
}

std::uint64_t Context::seed() const {
  if (seed_flag) return *seed_flag;
  return config.value("seed", std::uint64_t{0});
}

const nlohmann::json& Context::section(const char* name) const {
  static const nlohmann::json empty = nlohmann::json::object();
  auto it = config.find(name);
  return it != config.end() && it->is_object() ? *it : empty;
}

void Context::emit(const nlohmann::json& summary, const std::string& human) const {
  if (json) {
    std::cout << summary.dump(2) << '\n';
  } else if (!human.empty()) {
    std::cout << human;
    if (human.back() != '\n') std::cout << '\n';
  }
}

namespace {

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": \"" + item + "\" is not a number");
    }
  }
  if (out.size() != expected) {
    throw UsageError(flag + " expects " + std::to_string(expected) + " comma-separated numbers, got \"" + text + "\"");
  }
  return out;
}

}  // namespace

srir::Vec3 parse_vec3(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, 3, flag);
  return {v[0], v[1], v[2]};
}

srir::Range parse_range(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, 2, flag);
  return {v[0], v[1]};
}

void SceneArgs::add_to(CLI::App* app, bool required) {
  auto* s = app->add_option("--scene", scene, "Scene JSON (full document or shoebox shorthand)");
  auto* m = app->add_option("--mesh", mesh, "OBJ mesh (triangles only)");
  auto* mat = app->add_option("--materials", materials, "Materials JSON for --mesh");
  s->excludes(m);
  m->needs(mat);
  mat->needs(m);
  if (required) {
    app->callback([this] {
      if (!given()) throw CLI::RequiredError("--scene or --mesh");
    });
  }
}

srir::SceneGraph SceneArgs::load() const {
  if (!scene.empty()) return srir::load_scene_json(scene);
  return srir::load_scene(mesh, materials);
}

int exit_code_for(srir::ErrorCode code) {
  switch (code) {
    case srir::ErrorCode::kConfig:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

std::string format_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", ms);
  return buf;
}

}  // namespace srirkit
