#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "common.hpp"
#include "srir/image_source.hpp"
#include "srir/nn/train.hpp"

namespace srirkit {

namespace fs = std::filesystem;

namespace {

srir::DatasetConfig dataset_config(const Context& ctx) {
  srir::DatasetConfig c = srir::DatasetConfig::from_json(ctx.section("dataset"));
  c.seed = ctx.seed();
  return c;
}

srir::nn::TrainOptions train_options(const Context& ctx) {
  const auto& t = ctx.section("train");
  const auto& l = ctx.section("loss");
  srir::nn::TrainOptions o;
  o.steps = t.value("steps", o.steps);
  o.batch_size = t.value("batch_size", o.batch_size);
  o.learning_rate = t.value("learning_rate", o.learning_rate);
  o.momentum = t.value("momentum", o.momentum);
  o.clip_norm = t.value("clip_norm", o.clip_norm);
  o.er_weights.alpha = l.value("alpha", o.er_weights.alpha);
  o.er_weights.beta = l.value("beta", o.er_weights.beta);
  o.er_weights.gamma = l.value("gamma", o.er_weights.gamma);
  o.seed = ctx.seed();
  return o;
}

void add_dataset(CLI::App& app, Context& ctx, Registry& out) {
  auto* ds = app.add_subcommand("dataset", "Generate or analyze a training dataset");
  ds->require_subcommand(1);

  struct GenOpts {
    std::string out, refl, scat;
    std::vector<std::string> scenes;
    std::size_t variants = 0, pairs = 0;
    int max_order = -1;
    double clearance = -1.0;
  };
  auto g = std::make_shared<GenOpts>();
  auto* gen = ds->add_subcommand("gen", "Simulate oracle SRIRs, LoRs and parameters for perturbed shoeboxes");
  gen->add_option("-o,--out", g->out, "Output directory")->required();
  gen->add_option("--scene", g->scenes, "Base shoebox scene JSON (repeatable; default: four built-in rooms)")
      ;
  gen->add_option("--variants", g->variants, "Material variants per scene");
  gen->add_option("--pairs", g->pairs, "Position pairs per variant");
  gen->add_option("--max-order", g->max_order, "Oracle reflection order")->check(CLI::Range(2, 40));
  gen->add_option("--refl", g->refl, "Reflectivity range lo,hi");
  gen->add_option("--scat", g->scat, "Scattering range lo,hi");
  gen->add_option("--clearance", g->clearance, "Minimum distance of positions from any face plane (m)");
  out.push_back({gen, [&ctx, g] {
                   srir::DatasetConfig c = dataset_config(ctx);
                   if (g->variants > 0) c.variants_per_scene = g->variants;
                   if (g->pairs > 0) c.pairs_per_variant = g->pairs;
                   if (g->max_order >= 0) c.max_order = g->max_order;
                   if (!g->refl.empty()) c.reflectivity = parse_range(g->refl, "--refl");
                   if (!g->scat.empty()) c.scattering = parse_range(g->scat, "--scat");
                   if (g->clearance >= 0.0) c.min_clearance = g->clearance;
                   std::vector<srir::NamedScene> scenes;
                   if (g->scenes.empty()) {
                     scenes = srir::default_base_scenes();
                   } else {
                     for (const auto& p : g->scenes) scenes.push_back({fs::path(p).stem().string(), srir::load_scene_json(p)});
                   }
                   const bool verbose = !ctx.json;
                   const auto m = srir::generate_dataset(scenes, c, g->out, [&](std::size_t done, std::size_t total) {
                     if (verbose && (done % 16 == 0 || done == total)) std::cerr << "\r" << done << "/" << total << std::flush;
                   });
                   if (verbose) std::cerr << '\n';
                   const fs::path manifest = fs::path(g->out) / srir::kManifestName;
                   ctx.emit({{"manifest", manifest.string()}, {"entries", m.entries.size()}, {"config", c.to_json()}},
                            "wrote " + std::to_string(m.entries.size()) + " entries, manifest " + manifest.string());
                 }});

  struct AnalyzeOpts {
    std::string manifest, out;
    std::size_t bins = 0;
    bool no_plot = false;
  };
  auto a = std::make_shared<AnalyzeOpts>();
  auto* an = ds->add_subcommand("analyze", "PCA of band energy spectra and T60 histogram");
  an->add_option("--manifest", a->manifest, "Manifest file or dataset directory")->required();
  an->add_option("-o,--out", a->out, "Directory for diversity.csv, t60_histogram.csv and diversity.svg")->required();
  an->add_option("--bins", a->bins, "Histogram bins (default from config)");
  an->add_flag("--no-plot", a->no_plot, "Skip the SVG plot");
  out.push_back({an, [&ctx, a] {
                   const auto m = srir::load_manifest(a->manifest);
                   srir::validate_manifest(m);
                   const std::size_t bins = a->bins > 0 ? a->bins : ctx.section("dataset").value("histogram_bins", 20);
                   const auto r = srir::analyze_diversity(m, bins);
                   std::error_code ec;
                   fs::create_directories(a->out, ec);
                   if (ec) srir::fail(srir::ErrorCode::kIo, "cannot create " + a->out + ": " + ec.message());
                   const fs::path dir(a->out);
                   srir::write_diversity_csv(r, dir / "diversity.csv");
                   srir::write_histogram_csv(r, dir / "t60_histogram.csv");
                   if (!a->no_plot) srir::write_diversity_svg(r, dir / "diversity.svg");
                   const auto [lo, hi] = std::minmax_element(r.t60.begin(), r.t60.end());
                   const auto& ev = r.pca.eigenvalues;
                   nlohmann::json j{{"entries", r.t60.size()},
                                    {"t60_min", *lo},
                                    {"t60_max", *hi},
                                    {"t60_ratio", r.t60_ratio()},
                                    {"pc_variance", {ev(0), ev(1)}},
                                    {"zero_variance", r.pca.zero_variance},
                                    {"histogram", {{"edges", r.t60_histogram.edges}, {"counts", r.t60_histogram.counts}}}};
                   std::ostringstream os;
                   os << r.t60.size() << " entries, T60 " << *lo << " - " << *hi << " s (ratio " << r.t60_ratio()
                      << "), PC variances " << ev(0) << ", " << ev(1) << "\nwrote " << (dir / "diversity.csv").string();
                   ctx.emit(j, os.str());
                 }});
}

void add_train(CLI::App& app, Context& ctx, Registry& out) {
  struct Opts {
    std::string manifest, out, loss_csv, model_config;
    std::size_t steps = 0, batch = 0, limit = 0;
    double lr = 0.0, momentum = -1.0;
    bool no_lor = false;
  };
  auto o = std::make_shared<Opts>();
  auto* t = app.add_subcommand("train", "Train the toy model on a dataset manifest");
  t->add_option("--manifest", o->manifest, "Manifest file or dataset directory")->required();
  t->add_option("-o,--output", o->out, "Checkpoint to write")->required();
  t->add_option("--steps", o->steps, "Optimizer steps (default from config)");
  t->add_option("--batch", o->batch, "Examples per step (default from config)");
  t->add_option("--limit", o->limit, "Use only the first N entries");
  t->add_option("--lr", o->lr, "Learning rate (default from config)");
  t->add_option("--momentum", o->momentum, "Momentum in [0, 1) (default from config)");
  t->add_option("--model-config", o->model_config, "JSON overriding model settings");
  t->add_flag("--no-lor", o->no_lor, "Replace the LoR embedding by zeros (ablation)");
  t->add_option("--loss-csv", o->loss_csv, "Write the per-step loss trajectory here");
  out.push_back({t, [&ctx, o] {
                   nlohmann::json model_json = ctx.section("model");
                   if (!o->model_config.empty()) {
                     std::ifstream is(o->model_config);
                     nlohmann::json patch;
                     try {
                       patch = nlohmann::json::parse(is);
                     } catch (const nlohmann::json::exception& e) {
                       srir::fail(srir::ErrorCode::kParse, o->model_config + ": " + e.what());
                     }
                     model_json.merge_patch(patch);
                   }
                   const auto cfg = srir::nn::ModelConfig::from_json(model_json);
                   srir::nn::TrainOptions opt = train_options(ctx);
                   if (o->steps > 0) opt.steps = o->steps;
                   if (o->batch > 0) opt.batch_size = o->batch;
                   if (o->lr > 0.0) opt.learning_rate = o->lr;
                   if (o->momentum >= 0.0) opt.momentum = o->momentum;
                   opt.use_lor = !o->no_lor;

                   const auto m = srir::load_manifest(o->manifest);
                   srir::validate_manifest(m);
                   const auto examples = srir::load_examples(m, cfg, o->limit);
                   srir::nn::SrirModel model(cfg, ctx.seed());
                   const bool verbose = !ctx.json;
                   const std::size_t every = std::max<std::size_t>(1, opt.steps / 10);
                   const auto result = srir::nn::train(model, examples, opt, [&](std::size_t step, double loss) {
                     if (verbose && (step % every == 0 || step + 1 == opt.steps)) {
                       std::cerr << "step " << step << " loss " << loss << '\n';
                     }
                   });
                   const nlohmann::json meta{{"steps", opt.steps},
                                             {"seed", opt.seed},
                                             {"learning_rate", opt.learning_rate},
                                             {"momentum", opt.momentum},
                                             {"batch_size", opt.batch_size},
                                             {"use_lor", opt.use_lor},
                                             {"examples", examples.size()},
                                             {"initial_loss", result.initial_loss},
                                             {"final_loss", result.final_loss}};
                   srir::nn::save_checkpoint(o->out, model, meta);
                   if (!o->loss_csv.empty()) {
                     std::ofstream csv(o->loss_csv);
                     if (!csv) srir::fail(srir::ErrorCode::kIo, "cannot write " + o->loss_csv);
                     csv << "step,loss\n";
                     csv.precision(12);
                     for (std::size_t i = 0; i < result.losses.size(); ++i) csv << i << ',' << result.losses[i] << '\n';
                   }
                   nlohmann::json j = meta;
                   j["checkpoint"] = o->out;
                   j["parameters"] = model.params().count();
                   std::ostringstream os;
                   os << "trained " << model.params().count() << " parameters on " << examples.size()
                      << " examples: loss " << result.initial_loss << " -> " << result.final_loss << "\nwrote " << o->out;
                   ctx.emit(j, os.str());
                 }});
}

void add_infer(CLI::App& app, Context& ctx, Registry& out) {
  struct Opts {
    SceneArgs scene;
    std::string checkpoint, src, lis, lor, out, params_out;
  };
  auto o = std::make_shared<Opts>();
  auto* inf = app.add_subcommand("infer", "Predict an SRIR with a trained checkpoint");
  inf->add_option("--checkpoint", o->checkpoint, "Checkpoint from `train`")->required();
  o->scene.add_to(inf);
  inf->add_option("--src", o->src, "Source position x,y,z")->required();
  inf->add_option("--lis", o->lis, "Listener position x,y,z")->required();
  inf->add_option("--lor", o->lor, "Precomputed LoR WAV (default: simulate it)");
  inf->add_option("-o,--output", o->out, "SRIR WAV to write")->required();
  inf->add_option("--params-out", o->params_out, "Also write the predicted parameters");
  out.push_back({inf, [&ctx, o] {
                   const auto model = srir::nn::load_checkpoint(o->checkpoint);
                   const auto g = o->scene.load();
                   const srir::PositionPair pair{parse_vec3(o->src, "--src"), parse_vec3(o->lis, "--lis")};
                   srir::validate_pair(g, pair);
                   const srir::AmbisonicIR lor =
                       o->lor.empty() ? srir::compute_lor(g, pair, srir::LorOrder{ctx.section("ga").value("lor_order", 2)},
                                                          model.config().sample_rate)
                                      : srir::load_ir(o->lor);
                   const auto input = srir::nn::make_input(g, pair, lor, model.config());
                   const auto params = model.to_params(model.forward(input));
                   const srir::AmbisonicIR ir = srir::synthesize(params, lor, ctx.seed());
                   srir::IrSidecar side = srir::sidecar_for(ir);
                   side.source = pair.source;
                   side.listener = pair.listener;
                   srir::save_ir(ir, o->out, side);
                   if (!o->params_out.empty()) srir::save_params(params, o->params_out);
                   std::ostringstream os;
                   os << "wrote " << o->out << ": T60 " << params.t60 << " s, g_er " << params.g_er << ", g_lr "
                      << params.g_lr << ", " << ir.length() << " samples";
                   ctx.emit({{"path", o->out},
                             {"t60", params.t60},
                             {"g_er", params.g_er},
                             {"g_lr", params.g_lr},
                             {"samples", ir.length()}},
                            os.str());
                 }});
}

}  // namespace

void register_learning_commands(CLI::App& app, Context& ctx, Registry& out) {
  add_dataset(app, ctx, out);
  add_train(app, ctx, out);
  add_infer(app, ctx, out);
}

}  // namespace srirkit
