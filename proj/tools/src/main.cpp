#include <iostream>

#include "common.hpp"

int main(int argc, char** argv) {
  using namespace srirkit;
  CLI::App app{"srirkit: spatial room impulse responses from scene graphs, low-order reflections and a neural "
               "parameter model"};
  app.set_version_flag("--version", "srirkit 0.1.0");
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  std::uint64_t seed = 0;
  app.add_flag("--json", ctx.json, "Machine-readable output on stdout");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (default from config)");
  app.add_option("--config", ctx.config_path, "JSON file merged over the built-in defaults");

  Registry commands;
  register_signal_commands(app, ctx, commands);
  register_learning_commands(app, ctx, commands);
  register_bench_command(app, ctx, commands);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) ctx.seed_flag = seed;

  try {
    ctx.load_config();
    for (const auto& c : commands) {
      if (c.app->parsed()) {
        c.run();
        return kExitOk;
      }
    }
    std::cerr << "error: no command selected\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const srir::Error& e) {
    std::cerr << "error (" << srir::to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
