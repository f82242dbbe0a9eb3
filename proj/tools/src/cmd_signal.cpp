#include <cmath>
#include <memory>
#include <sstream>

#include "common.hpp"
#include "srir/dsp/fft.hpp"
#include "srir/image_source.hpp"
#include "srir/metrics.hpp"
#include "srir/param_synth.hpp"

namespace srirkit {

namespace {

using srir::AmbisonicIR;

std::string describe_ir(const AmbisonicIR& ir) {
  std::ostringstream os;
  os << ir.length() << " samples x 4 channels at " << ir.sample_rate << " Hz";
  return os.str();
}

nlohmann::json ir_summary(const AmbisonicIR& ir, const std::string& path) {
  return {{"path", path}, {"samples", ir.length()}, {"sample_rate", ir.sample_rate}, {"energy", ir.energy()}};
}

void add_scene_shoebox(CLI::App& parent, Context& ctx, Registry& out) {
  auto* scene = parent.add_subcommand("scene", "Create or inspect scene files");
  scene->require_subcommand(1);

  struct ShoeboxOpts {
    std::string dims, out;
    double refl = 0.9, scat = 0.1;
  };
  auto so = std::make_shared<ShoeboxOpts>();
  auto* shoebox = scene->add_subcommand("shoebox", "Write an axis-aligned box scene");
  shoebox->add_option("--dims", so->dims, "Width,depth,height in metres")->required();
  shoebox->add_option("--refl", so->refl, "Reflectivity for every face and band")->check(CLI::Range(0.0, 1.0));
  shoebox->add_option("--scat", so->scat, "Scattering for every face and band")->check(CLI::Range(0.0, 1.0));
  shoebox->add_option("-o,--output", so->out, "Scene JSON to write")->required();
  out.push_back({shoebox, [&ctx, so] {
                   const srir::Vec3 dims = parse_vec3(so->dims, "--dims");
                   const auto g = srir::make_shoebox(dims, srir::uniform_bands(so->refl), srir::uniform_bands(so->scat));
                   srir::save_scene_json(g, so->out);
                   ctx.emit({{"path", so->out}, {"faces", g.size()}}, "wrote " + so->out + " (12 faces)");
                 }});

  auto sa = std::make_shared<SceneArgs>();
  auto* info = scene->add_subcommand("info", "Summarize a scene");
  sa->add_to(info);
  out.push_back({info, [&ctx, sa] {
                   const auto g = sa->load();
                   const auto box = g.bounding_box();
                   std::size_t edges = 0;
                   for (std::size_t i = 0; i < g.size(); ++i) edges += g.neighbors(i).size();
                   const bool is_box = srir::detect_shoebox(g).has_value();
                   nlohmann::json j{{"faces", g.size()},
                                    {"adjacent_pairs", edges / 2},
                                    {"bbox_min", {box.min.x, box.min.y, box.min.z}},
                                    {"bbox_max", {box.max.x, box.max.y, box.max.z}},
                                    {"shoebox", is_box}};
                   std::ostringstream os;
                   os << g.size() << " faces, " << edges / 2 << " adjacent pairs, bbox " << box.min << " - " << box.max
                      << (is_box ? ", shoebox" : "");
                   ctx.emit(j, os.str());
                 }});
}

void add_simulate(CLI::App& app, Context& ctx, Registry& out) {
  struct Opts {
    SceneArgs scene;
    std::string src, lis, out;
    int order = -1;
    double fs = 0.0;
    std::size_t length = 0;
  };

  auto lo = std::make_shared<Opts>();
  auto* lor = app.add_subcommand("simulate-lor", "Direct sound plus low-order reflections (image sources)");
  lo->scene.add_to(lor);
  lor->add_option("--src", lo->src, "Source position x,y,z")->required();
  lor->add_option("--lis", lo->lis, "Listener position x,y,z")->required();
  lor->add_option("--order", lo->order, "Reflection order (default from config)")->check(CLI::Range(0, 10));
  lor->add_option("--fs", lo->fs, "Sample rate in Hz (default from config)");
  lor->add_option("--length", lo->length, "Output length in samples (0 = fit arrivals)");
  lor->add_option("-o,--output", lo->out, "4-channel WAV to write (sidecar JSON alongside)")->required();
  out.push_back({lor, [&ctx, lo] {
                   const auto g = lo->scene.load();
                   const srir::PositionPair pair{parse_vec3(lo->src, "--src"), parse_vec3(lo->lis, "--lis")};
                   const int order = lo->order >= 0 ? lo->order : ctx.section("ga").value("lor_order", 2);
                   const double fs = lo->fs > 0.0 ? lo->fs : ctx.config.value("sample_rate", srir::kDefaultSampleRate);
                   const AmbisonicIR ir = srir::compute_lor(g, pair, srir::LorOrder{order}, fs, lo->length);
                   srir::IrSidecar side = srir::sidecar_for(ir);
                   side.source = pair.source;
                   side.listener = pair.listener;
                   side.lor_order = order;
                   srir::save_ir(ir, lo->out, side);
                   ctx.emit(ir_summary(ir, lo->out), "wrote " + lo->out + ": " + describe_ir(ir));
                 }});

  auto so = std::make_shared<Opts>();
  auto* sim = app.add_subcommand("simulate", "High-order shoebox reference SRIR");
  so->scene.add_to(sim);
  sim->add_option("--src", so->src, "Source position x,y,z")->required();
  sim->add_option("--lis", so->lis, "Listener position x,y,z")->required();
  sim->add_option("--max-order", so->order, "Maximum reflection order (default from config)")->check(CLI::Range(0, 40));
  sim->add_option("--fs", so->fs, "Sample rate in Hz (default from config)");
  sim->add_option("--length", so->length, "Output length in samples (0 = fit arrivals)");
  sim->add_option("-o,--output", so->out, "4-channel WAV to write")->required();
  out.push_back({sim, [&ctx, so] {
                   const auto g = so->scene.load();
                   const srir::PositionPair pair{parse_vec3(so->src, "--src"), parse_vec3(so->lis, "--lis")};
                   const int order = so->order >= 0 ? so->order : ctx.section("ga").value("reference_max_order", 20);
                   const double fs = so->fs > 0.0 ? so->fs : ctx.config.value("sample_rate", srir::kDefaultSampleRate);
                   const AmbisonicIR ir = srir::simulate_reference(g, pair, order, fs, so->length);
                   srir::IrSidecar side = srir::sidecar_for(ir);
                   side.source = pair.source;
                   side.listener = pair.listener;
                   srir::save_ir(ir, so->out, side);
                   ctx.emit(ir_summary(ir, so->out), "wrote " + so->out + ": " + describe_ir(ir));
                 }});
}

void add_params(CLI::App& app, Context& ctx, Registry& out) {
  struct ExtractOpts {
    std::string srir, lor, out;
    double boundary_ms = -1.0;
  };
  auto eo = std::make_shared<ExtractOpts>();
  auto* ex = app.add_subcommand("extract", "Estimate perceptual parameters from an SRIR and its LoR");
  ex->add_option("--srir", eo->srir, "Full SRIR WAV")->required();
  ex->add_option("--lor", eo->lor, "LoR WAV of the same position pair")->required();
  ex->add_option("--boundary-ms", eo->boundary_ms, "Early/late boundary after the direct sound (default from config)");
  ex->add_option("-o,--output", eo->out, "Parameter JSON to write (early part goes to <stem>_er.wav)")->required();
  out.push_back({ex, [&ctx, eo] {
                   srir::ExtractOptions opt;
                   const auto& syn = ctx.section("synthesis");
                   opt.er_boundary_ms = eo->boundary_ms >= 0.0 ? eo->boundary_ms : syn.value("er_boundary_ms", 80.0);
                   opt.n_env_points = syn.value("n_env_points", srir::kEnvelopePoints);
                   const auto p = srir::extract_params(srir::load_ir(eo->srir), srir::load_ir(eo->lor), opt);
                   srir::save_params(p, eo->out);
                   std::ostringstream os;
                   os << "wrote " << eo->out << ": T60 " << p.t60 << " s, g_er " << p.g_er << ", g_lr " << p.g_lr;
                   ctx.emit({{"path", eo->out}, {"t60", p.t60}, {"g_er", p.g_er}, {"g_lr", p.g_lr}, {"er_length", p.er_length()}},
                            os.str());
                 }});

  struct SynthOpts {
    std::string params, lor, out;
  };
  auto so = std::make_shared<SynthOpts>();
  auto* syn = app.add_subcommand("synthesize", "Rebuild an SRIR from parameters, LoR and shaped noise");
  syn->add_option("--params", so->params, "Parameter JSON")->required();
  syn->add_option("--lor", so->lor, "LoR WAV")->required();
  syn->add_option("-o,--output", so->out, "4-channel WAV to write")->required();
  out.push_back({syn, [&ctx, so] {
                   const auto p = srir::load_params(so->params);
                   const AmbisonicIR ir = srir::synthesize(p, srir::load_ir(so->lor), ctx.seed());
                   srir::save_ir(ir, so->out);
                   ctx.emit(ir_summary(ir, so->out), "wrote " + so->out + ": " + describe_ir(ir));
                 }});
}

void add_render(CLI::App& app, Context& ctx, Registry& out) {
  struct Opts {
    std::string srir, input, out;
    std::vector<std::size_t> channels{0, 1, 2, 3};
    bool normalize = false;
  };
  auto o = std::make_shared<Opts>();
  auto* r = app.add_subcommand("render", "Convolve a dry mono signal with SRIR channels");
  r->add_option("--srir", o->srir, "SRIR WAV")->required();
  r->add_option("--input", o->input, "Dry mono WAV (first channel is used)")->required();
  r->add_option("--channels", o->channels, "SRIR channels to render")->delimiter(',')->check(CLI::Range(0, 3));
  r->add_flag("--normalize", o->normalize, "Scale the output to a 0.99 peak");
  r->add_option("-o,--output", o->out, "Multichannel WAV to write")->required();
  out.push_back({r, [&ctx, o] {
                   const AmbisonicIR ir = srir::load_ir(o->srir);
                   const srir::WavData dry = srir::read_wav(o->input);
                   if (dry.channels.empty() || dry.channels[0].empty()) {
                     srir::fail(srir::ErrorCode::kShape, o->input + " holds no samples");
                   }
                   if (std::abs(dry.sample_rate - ir.sample_rate) > 1e-9) {
                     srir::fail(srir::ErrorCode::kDomain, "sample rates differ: " + o->input + " is " +
                                                              std::to_string(dry.sample_rate) + " Hz, " + o->srir +
                                                              " is " + std::to_string(ir.sample_rate) + " Hz");
                   }
                   std::vector<std::vector<double>> wet;
                   for (std::size_t c : o->channels) wet.push_back(srir::dsp::fft_convolve(dry.channels[0], ir.channels[c]));
                   double peak = 0.0;
                   for (const auto& ch : wet) {
                     for (double v : ch) peak = std::max(peak, std::abs(v));
                   }
                   if (o->normalize && peak > 0.0) {
                     for (auto& ch : wet) {
                       for (double& v : ch) v *= 0.99 / peak;
                     }
                   }
                   srir::write_wav(o->out, wet, ir.sample_rate);
                   const std::size_t n = wet.front().size();
                   ctx.emit({{"path", o->out}, {"channels", wet.size()}, {"samples", n}, {"input_peak", peak}},
                            "wrote " + o->out + ": " + std::to_string(wet.size()) + " channels, " + std::to_string(n) +
                                " samples");
                 }});
}

void add_metrics(CLI::App& app, Context& ctx, Registry& out) {
  struct Opts {
    std::string pred, target;
  };
  auto o = std::make_shared<Opts>();
  auto* m = app.add_subcommand("metrics", "Objective metrics between two SRIRs (JSON report)");
  m->add_option("--pred", o->pred, "Predicted SRIR WAV")->required();
  m->add_option("--target", o->target, "Reference SRIR WAV")->required();
  out.push_back({m, [&ctx, o] {
                   const auto& mc = ctx.section("metrics");
                   auto mel = [&](const char* key, srir::dsp::MelConfig base) {
                     const auto& j = mc.contains(key) ? mc.at(key) : nlohmann::json::object();
                     base.n_fft = j.value("n_fft", base.n_fft);
                     base.hop = j.value("hop", base.hop);
                     base.n_mels = j.value("n_mels", base.n_mels);
                     return base;
                   };
                   const AmbisonicIR pred = srir::load_ir(o->pred);
                   const AmbisonicIR target = srir::load_ir(o->target);
                   if (pred.sample_rate != target.sample_rate) {
                     srir::fail(srir::ErrorCode::kDomain, "sample rates of " + o->pred + " and " + o->target + " differ");
                   }
                   auto spectral = mel("mel_spectral", srir::dsp::MelConfig::spectral());
                   auto temporal = mel("mel_temporal", srir::dsp::MelConfig::temporal());
                   spectral.sample_rate = temporal.sample_rate = pred.sample_rate;
                   const srir::MetricReport rep = srir::compare(pred, target, spectral, temporal);
                   std::cout << rep.to_json().dump(2) << '\n';
                 }});
}

void add_defaults(CLI::App& app, Context& ctx, Registry& out) {
  auto* d = app.add_subcommand("defaults", "Print the effective configuration (defaults merged with --config)");
  out.push_back({d, [&ctx] { std::cout << ctx.config.dump(2) << '\n'; }});
}

}  // namespace

void register_signal_commands(CLI::App& app, Context& ctx, Registry& out) {
  add_scene_shoebox(app, ctx, out);
  add_simulate(app, ctx, out);
  add_params(app, ctx, out);
  add_render(app, ctx, out);
  add_metrics(app, ctx, out);
  add_defaults(app, ctx, out);
}

}  // namespace srirkit
