#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ambidoa/acoustics.hpp"
#include "ambidoa/eval.hpp"
#include "ambidoa/music.hpp"
#include "ambidoa/parallel.hpp"
#include "ambidoa/wav.hpp"

namespace fs = std::filesystem;
using namespace ambidoa;

namespace {

constexpr const char* kVersion = "0.1.0";

void write_run_json(const fs::path& dir, const std::string& subcommand, nlohmann::json config) {
  fs::create_directories(dir.empty() ? fs::path(".") : dir);
  nlohmann::json run{{"subcommand", subcommand},
                     {"version", kVersion},
                     {"threads", thread_count()},
                     {"config", std::move(config)}};
  std::ofstream os((dir.empty() ? fs::path(".") : dir) / "run.json");
  os << run.dump(2) << '\n';
}

fs::path parent_or_cwd(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

struct SimulateOpts {
  std::size_t count = 10;
  std::size_t pairs = 3;
  std::uint64_t seed = 1;
  std::string method = "image";
  int max_order = 10;
  std::size_t rays = 4000;
  double ir_seconds = 1.0;
  double absorption_min = 0.1;
  double absorption_max = 0.7;
  double scattering_min = 0.0;
  double scattering_max = 1.0;
  std::string out;
};

void run_simulate(const SimulateOpts& o) {
  SceneSampling sampling;
  sampling.pairs_per_room = o.pairs;
  sampling.absorption_min = o.absorption_min;
  sampling.absorption_max = o.absorption_max;
  sampling.scattering_min = o.scattering_min;
  sampling.scattering_max = o.scattering_max;
  const auto method = parse_method(o.method);
  const auto scenes = sample_scenes(o.count * o.pairs, o.seed, sampling);
  const fs::path out(o.out);
  fs::create_directories(out / "srir");
  auto batch = scenes_to_json(scenes, o.seed);
  std::ofstream(out / "scenes.json") << batch.dump(2) << '\n';
  const auto ir_len = static_cast<std::size_t>(o.ir_seconds * kDefaultSampleRate);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::vector<AcousticPath> paths;
    if (method == PropagationMethod::image) {
      paths = image_source_paths(scenes[i], o.max_order);
    } else {
      TraceParams tp;
      tp.n_rays = o.rays;
      tp.rng_seed = o.seed * 1000003ULL + i;
      tp.max_delay = o.ir_seconds;
      paths = trace_paths(scenes[i], tp);
    }
    std::erase_if(paths, [&](const AcousticPath& p) {
      return std::llround(p.delay * kDefaultSampleRate) >= static_cast<long long>(ir_len);
    });
    char name[32];
    std::snprintf(name, sizeof(name), "srir_%05zu.wav", i);
    wav::write_foa(out / "srir" / name, encode_srir(paths, kDefaultSampleRate, ir_len));
  }
  write_run_json(out, "simulate",
                 {{"count", o.count}, {"pairs", o.pairs}, {"seed", o.seed}, {"method", o.method},
                  {"max_order", o.max_order}, {"rays", o.rays}, {"ir_seconds", o.ir_seconds},
                  {"absorption_min", o.absorption_min}, {"absorption_max", o.absorption_max},
                  {"scattering_min", o.scattering_min}, {"scattering_max", o.scattering_max}, {"out", o.out}});
  std::cout << "simulated " << scenes.size() << " scenes in " << o.count << " rooms -> " << (out / "scenes.json")
            << '\n';
}

struct RenderOpts {
  std::string scenes;
  std::string out;
  std::string speech_dir;
  bool synthetic = false;
  std::string method = "image";
  std::string preset = "desk";
  int max_order = 10;
  std::size_t rays = 4000;
  std::uint64_t seed = 1;
};

void run_render(const RenderOpts& o) {
  std::ifstream is(o.scenes);
  if (!is) throw std::runtime_error("cannot open scene batch " + o.scenes);
  const auto scenes = scenes_from_json(nlohmann::json::parse(is));
  const NetworkConfig net = NetworkConfig::preset(o.preset);
  RenderConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.max_order = o.max_order;
  cfg.trace.n_rays = o.rays;
  cfg.stft = net.stft();
  cfg.frames = net.frames;
  cfg.synthetic_speech = o.synthetic;
  cfg.seed = o.seed;
  const auto records = render_dataset(scenes, o.speech_dir, cfg, o.out);
  auto j = cfg.to_json();
  j["scenes"] = o.scenes;
  j["speech_dir"] = o.speech_dir;
  j["preset"] = o.preset;
  j["out"] = o.out;
  write_run_json(o.out, "render", j);
  std::cout << "rendered " << records.size() << " samples -> " << (fs::path(o.out) / "manifest.jsonl") << '\n';
}

struct TrainOpts {
  std::string manifest;
  std::string formulation = "cartesian";
  std::string preset = "desk";
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::string out = "model.adom";
  double lr = 1e-3;
  std::size_t batch = 16;
  double validation_fraction = 0.2;
  double resolution = 10.0;
};

void run_train(const TrainOpts& o) {
  const fs::path manifest(o.manifest);
  const auto records = read_manifest(manifest);
  const auto samples = load_samples(parent_or_cwd(manifest), records);
  std::vector<LabeledSample> train_set, val_set;
  if (o.validation_fraction > 0.0) {
    const Split split = split_by_room(records, o.validation_fraction, o.seed);
    for (auto i : split.train) train_set.push_back(samples[i]);
    for (auto i : split.test) val_set.push_back(samples[i]);
  } else {
    train_set = samples;
  }
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  const auto formulation = Formulation::parse(o.formulation, o.resolution);
  const auto net_cfg = NetworkConfig::preset(o.preset);
  const auto result = train(train_set, val_set, formulation, net_cfg, tc);

  nlohmann::json extra{{"train", tc.to_json()}, {"manifest", o.manifest}, {"preset", o.preset}};
  save_checkpoint(o.out, result.network, extra);
  const fs::path out(o.out);
  const fs::path dir = parent_or_cwd(out);
  std::ofstream hist(dir / (out.stem().string() + "_history.csv"));
  hist << "epoch,train_loss,validation_loss,validation_mean_error_deg\n";
  hist << 0 << ',' << result.history.initial_train_loss << ",,\n";
  for (const auto& e : result.history.epochs) {
    hist << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.validation_mean_error_deg << '\n';
    std::cout << "epoch " << e.epoch << "  train " << e.train_loss << "  val " << e.validation_loss
              << "  val_err " << e.validation_mean_error_deg << " deg\n";
  }
  write_run_json(dir, "train",
                 {{"manifest", o.manifest}, {"formulation", o.formulation}, {"preset", o.preset},
                  {"epochs", o.epochs}, {"seed", o.seed}, {"out", o.out}, {"lr", o.lr}, {"batch", o.batch},
                  {"validation_fraction", o.validation_fraction}, {"resolution", o.resolution},
                  {"param_count", result.network.param_count()}});
  std::cout << "saved " << o.out << " (" << result.network.param_count() << " parameters)\n";
}

struct EvalOpts {
  std::string model;
  std::string manifest;
  std::string report = "report.csv";
};

void run_eval(const EvalOpts& o) {
  const Network net = load_checkpoint(o.model);
  const fs::path manifest(o.manifest);
  const auto records = read_manifest(manifest);
  const auto samples = load_samples(parent_or_cwd(manifest), records);
  const Evaluation ev = evaluate(net, samples);
  const ErrorSummary s = summarize_errors(ev.errors_deg);
  const fs::path report(o.report);
  std::ofstream os(report);
  os << "scene_id,truth_azimuth_deg,truth_elevation_deg,pred_azimuth_deg,pred_elevation_deg,error_deg\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    os << records[i].scene_id << ',' << rad2deg(records[i].label.azimuth) << ','
       << rad2deg(records[i].label.elevation) << ',' << rad2deg(ev.predictions[i].azimuth) << ','
       << rad2deg(ev.predictions[i].elevation) << ',' << ev.errors_deg[i] << '\n';
  }
  std::cout << std::fixed << std::setprecision(2) << "formulation " << net.formulation().name() << "  n "
            << s.count << "\nmean error   " << s.mean << " deg\nmedian error " << s.median
            << " deg\n<5 deg  " << s.accuracy[0] << " %\n<10 deg " << s.accuracy[1] << " %\n<15 deg "
            << s.accuracy[2] << " %\n";
  write_run_json(parent_or_cwd(report), "eval",
                 {{"model", o.model}, {"manifest", o.manifest}, {"report", o.report}});
}

struct CompareOpts {
  std::string image_manifest;
  std::string trace_manifest;
  std::vector<std::string> formulations{"categorical", "cartesian", "spherical"};
  std::string preset = "desk";
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  double resolution = 10.0;
  std::string report = "compare.csv";
};

void run_compare(const CompareOpts& o) {
  CompareConfig cfg;
  cfg.formulations = o.formulations;
  cfg.network = NetworkConfig::preset(o.preset);
  cfg.train.epochs = o.epochs;
  cfg.train.seed = o.seed;
  cfg.grid_resolution_deg = o.resolution;
  const auto rows = compare_methods(o.image_manifest, o.trace_manifest, cfg);
  std::ofstream os(o.report);
  write_comparison_csv(os, rows);
  print_comparison(std::cout, rows);
  write_run_json(parent_or_cwd(o.report), "compare",
                 {{"image_manifest", o.image_manifest}, {"trace_manifest", o.trace_manifest},
                  {"formulations", o.formulations}, {"preset", o.preset}, {"epochs", o.epochs},
                  {"seed", o.seed}, {"resolution", o.resolution}, {"report", o.report}});
}

struct MusicOpts {
  std::string input;
  double resolution = 10.0;
};

void run_music(const MusicOpts& o) {
  const FoaSignal sig = wav::read_foa(o.input);
  const SphereGrid grid = build_grid(o.resolution);
  MusicConfig mc;
  mc.stft = {1024, 512};
  const MusicResult r = music_estimate(sig, grid, mc);
  std::cout << std::fixed << std::setprecision(2) << "azimuth " << rad2deg(r.direction.azimuth)
            << " deg  elevation " << rad2deg(r.direction.elevation) << " deg\n";
  std::cout << "rank,class,azimuth_deg,elevation_deg,score\n";
  const auto top = r.ranking(5);
  for (std::size_t k = 0; k < top.size(); ++k) {
    const auto& c = grid.center(top[k]);
    std::cout << k + 1 << ',' << top[k] << ',' << rad2deg(c.azimuth) << ',' << rad2deg(c.elevation) << ','
              << std::setprecision(4) << r.scores[top[k]] << std::setprecision(2) << '\n';
  }
}

struct TrackOpts {
  std::string input;
  std::string model;
  bool music = false;
  double truth_az = 0.0;
  double truth_el = 0.0;
  std::size_t hop = 1;
  double resolution = 10.0;
  std::string csv = "track.csv";
  std::string svg;
};

void run_track(const TrackOpts& o) {
  if (o.model.empty() && !o.music) throw std::invalid_argument("track: give --model and/or --music");
  const FoaSignal sig = wav::read_foa(o.input);
  const Direction truth{deg2rad(o.truth_az), deg2rad(o.truth_el)};
  std::vector<std::string> names;
  std::vector<TrackResult> tracks;
  if (!o.model.empty()) {
    const Network net = load_checkpoint(o.model);
    names.push_back(net.formulation().name());
    tracks.push_back(track(net, sig, truth, o.hop));
  }
  if (o.music) {
    MusicConfig mc;
    mc.stft = {256, 128};
    names.push_back("music");
    tracks.push_back(track(build_grid(o.resolution), mc, sig, truth, o.hop));
  }
  std::ofstream csv(o.csv);
  write_track_csv(csv, names, tracks);
  if (!o.svg.empty()) {
    std::ofstream svg(o.svg);
    write_track_svg(svg, names, tracks);
  }
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    std::cout << names[k] << ": mean error " << summarize_errors(tracks[k].errors).mean << " deg over "
              << tracks[k].errors.size() << " windows\n";
  }
}

struct GridOpts {
  double resolution = 10.0;
  std::string csv;
  std::size_t probes = 10000;
};

void run_gridinfo(const GridOpts& o) {
  const SphereGrid grid = build_grid(o.resolution);
  const double radius = grid.coverage_radius_deg(random_directions(o.probes, 1));
  std::cout << "resolution " << o.resolution << " deg\nclasses " << grid.size() << "\ncoverage radius "
            << std::fixed << std::setprecision(3) << radius << " deg (" << o.probes << " probes)\n";
  if (!o.csv.empty()) {
    std::ofstream os(o.csv);
    grid.write_csv(os);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"Ambisonic direction-of-arrival toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Sample shoebox scenes and write their SRIRs");
  c_sim->add_option("--count", sim.count, "Number of rooms")->check(CLI::PositiveNumber);
  c_sim->add_option("--pairs", sim.pairs, "Source/listener pairs per room")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--method", sim.method)->check(CLI::IsMember({"image", "trace"}));
  c_sim->add_option("--max-order", sim.max_order)->check(CLI::NonNegativeNumber);
  c_sim->add_option("--rays", sim.rays)->check(CLI::PositiveNumber);
  c_sim->add_option("--ir-seconds", sim.ir_seconds)->check(CLI::PositiveNumber);
  c_sim->add_option("--absorption-min", sim.absorption_min)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--absorption-max", sim.absorption_max)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--scattering-min", sim.scattering_min)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--scattering-max", sim.scattering_max)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--out", sim.out)->required();

  RenderOpts ren;
  auto* c_ren = app.add_subcommand("render", "Render a feature dataset from a scene batch");
  c_ren->add_option("--scenes", ren.scenes, "scenes.json from simulate")->required();
  c_ren->add_option("--out", ren.out)->required();
  c_ren->add_option("--speech-dir", ren.speech_dir, "Directory of mono 16 kHz WAV files");
  c_ren->add_flag("--synthetic-speech", ren.synthetic, "Use the built-in speech stand-in");
  c_ren->add_option("--method", ren.method)->check(CLI::IsMember({"image", "trace"}));
  c_ren->add_option("--preset", ren.preset)->check(CLI::IsMember({"paper", "desk", "tiny"}));
  c_ren->add_option("--max-order", ren.max_order)->check(CLI::NonNegativeNumber);
  c_ren->add_option("--rays", ren.rays)->check(CLI::PositiveNumber);
  c_ren->add_option("--seed", ren.seed);

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "Train a DOA network");
  c_tr->add_option("--manifest", tr.manifest)->required();
  c_tr->add_option("--formulation", tr.formulation)->check(CLI::IsMember({"categorical", "cartesian", "spherical"}));
  c_tr->add_option("--preset", tr.preset)->check(CLI::IsMember({"paper", "desk", "tiny"}));
  c_tr->add_option("--epochs", tr.epochs);
  c_tr->add_option("--seed", tr.seed);
  c_tr->add_option("--out", tr.out);
  c_tr->add_option("--lr", tr.lr)->check(CLI::PositiveNumber);
  c_tr->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
  c_tr->add_option("--validation-fraction", tr.validation_fraction)->check(CLI::Range(0.0, 0.9));
  c_tr->add_option("--resolution", tr.resolution, "Categorical grid resolution (deg)")->check(CLI::Range(1.0, 90.0));

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a model on a manifest");
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--manifest", ev.manifest)->required();
  c_ev->add_option("--report", ev.report);

  CompareOpts cmp;
  auto* c_cmp = app.add_subcommand("compare", "Compare image-source and path-traced training data");
  c_cmp->add_option("--image-manifest", cmp.image_manifest)->required();
  c_cmp->add_option("--trace-manifest", cmp.trace_manifest)->required();
  c_cmp->add_option("--formulations", cmp.formulations)->check(CLI::IsMember({"categorical", "cartesian", "spherical"}));
  c_cmp->add_option("--preset", cmp.preset)->check(CLI::IsMember({"paper", "desk", "tiny"}));
  c_cmp->add_option("--epochs", cmp.epochs);
  c_cmp->add_option("--seed", cmp.seed);
  c_cmp->add_option("--resolution", cmp.resolution)->check(CLI::Range(1.0, 90.0));
  c_cmp->add_option("--report", cmp.report);

  MusicOpts mu;
  auto* c_mu = app.add_subcommand("music", "MUSIC estimate for a 4-channel FOA WAV");
  c_mu->add_option("--input", mu.input)->required()->check(CLI::ExistingFile);
  c_mu->add_option("--resolution", mu.resolution)->check(CLI::Range(1.0, 90.0));

  TrackOpts tk;
  auto* c_tk = app.add_subcommand("track", "Sliding-window tracking of a FOA WAV");
  c_tk->add_option("--input", tk.input)->required()->check(CLI::ExistingFile);
  c_tk->add_option("--model", tk.model);
  c_tk->add_flag("--music", tk.music);
  c_tk->add_option("--truth-az", tk.truth_az);
  c_tk->add_option("--truth-el", tk.truth_el);
  c_tk->add_option("--hop", tk.hop)->check(CLI::PositiveNumber);
  c_tk->add_option("--resolution", tk.resolution)->check(CLI::Range(1.0, 90.0));
  c_tk->add_option("--csv", tk.csv);
  c_tk->add_option("--svg", tk.svg);

  GridOpts gr;
  auto* c_gr = app.add_subcommand("gridinfo", "Class grid statistics");
  c_gr->add_option("--resolution", gr.resolution)->check(CLI::Range(1.0, 90.0));
  c_gr->add_option("--csv", gr.csv);
  c_gr->add_option("--probes", gr.probes)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_sim->parsed()) run_simulate(sim);
    else if (c_ren->parsed()) run_render(ren);
    else if (c_tr->parsed()) run_train(tr);
    else if (c_ev->parsed()) run_eval(ev);
    else if (c_cmp->parsed()) run_compare(cmp);
    else if (c_mu->parsed()) run_music(mu);
    else if (c_tk->parsed()) run_track(tk);
    else if (c_gr->parsed()) run_gridinfo(gr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
