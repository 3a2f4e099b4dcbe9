#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ambidoa/eval.hpp"
#include "ambidoa/features_io.hpp"
#include "ambidoa/wav.hpp"

using namespace ambidoa;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ambidoa_eval_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RenderConfig small_render(PropagationMethod m) {
  RenderConfig cfg;
  cfg.method = m;
  cfg.max_order = 3;
  cfg.trace.n_rays = 500;
  cfg.synthetic_speech = true;
  cfg.clip_seconds = 0.5;
  cfg.ir_seconds = 0.25;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("angular error") {
  CHECK(angular_error({0, 0}, {0, 0}) == 0.0);
  CHECK(angular_error({0, 0}, {kPi, 0}) == doctest::Approx(180.0));
  CHECK(angular_error({0, 0}, {0, deg2rad(10)}) == doctest::Approx(10.0));
  const auto a = random_directions(100, 1), b = random_directions(100, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(angular_error(a[i], b[i]) == angular_error(b[i], a[i]));
    CHECK(angular_error(a[i], b[i]) <= 180.0);
  }
}

TEST_CASE("tolerance accuracy") {
  const auto acc = tolerance_accuracy({3, 7, 20});
  CHECK(acc[0] == doctest::Approx(100.0 / 3));
  CHECK(acc[1] == doctest::Approx(200.0 / 3));
  CHECK(acc[2] == doctest::Approx(200.0 / 3));
  CHECK(tolerance_accuracy({0, 0, 0}) == std::vector<double>{100, 100, 100});
  CHECK(tolerance_accuracy({90, 90}) == std::vector<double>{0, 0, 0});
  CHECK(tolerance_accuracy({5.0}) == std::vector<double>{0, 100, 100});
  CHECK_THROWS_AS(tolerance_accuracy({}), std::invalid_argument);
  const auto mono = tolerance_accuracy({1, 4, 8, 12, 30, 60}, {1, 5, 10, 20, 90});
  for (std::size_t i = 1; i < mono.size(); ++i) CHECK(mono[i - 1] <= mono[i]);
}

TEST_CASE("summary statistics") {
  const ErrorSummary s = summarize_errors({1, 2, 3, 10});
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.count == 4);
}

TEST_CASE("scene batch JSON round trip") {
  const auto scenes = sample_scenes(7, 3);
  const auto back = scenes_from_json(scenes_to_json(scenes, 3));
  REQUIRE(back.size() == 7);
  CHECK(scenes_to_json(scenes, 3)["rooms"].size() == 3);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(back[i].source == scenes[i].source);
    CHECK(back[i].listener == scenes[i].listener);
    CHECK(back[i].room.dims == scenes[i].room.dims);
    CHECK(back[i].room_index == scenes[i].room_index);
  }
}

TEST_CASE("render: counts, labels, method independence, determinism") {
  const auto scenes = sample_scenes(30, 11);
  const fs::path a = fresh_dir("img"), b = fresh_dir("trace"), c = fresh_dir("img2");
  const auto ri = render_dataset(scenes, {}, small_render(PropagationMethod::image), a);
  const auto rt = render_dataset(scenes, {}, small_render(PropagationMethod::trace), b);
  render_dataset(scenes, {}, small_render(PropagationMethod::image), c);
  REQUIRE(ri.size() == 30);
  CHECK(read_manifest(a / "manifest.jsonl").size() == 30);
  CHECK(slurp(a / "manifest.jsonl") == slurp(c / "manifest.jsonl"));
  CHECK(slurp(a / ri[4].features_path) == slurp(c / ri[4].features_path));
  bool any_diff = false;
  for (std::size_t i = 0; i < ri.size(); ++i) {
    CHECK(ri[i].label == rt[i].label);
    CHECK(ri[i].label == scenes[i].source_direction());
    CHECK(ri[i].snr_db == rt[i].snr_db);
    CHECK(std::abs(ri[i].label.unit().norm() - 1.0) < 1e-12);
    CHECK(fs::exists(a / ri[i].features_path));
    any_diff |= read_features(a / ri[i].features_path).values != read_features(b / rt[i].features_path).values;
  }
  CHECK(any_diff);
  const auto samples = load_samples(a, ri);
  CHECK(samples[0].features.frames == 25);
  CHECK(samples[0].features.bins == 129);
}

TEST_CASE("render requires speech or the synthetic flag") {
  const auto scenes = sample_scenes(3, 1);
  RenderConfig cfg = small_render(PropagationMethod::image);
  cfg.synthetic_speech = false;
  const fs::path empty = fresh_dir("empty_speech");
  CHECK_THROWS_AS(render_dataset(scenes, empty, cfg, fresh_dir("out_none")), std::invalid_argument);

  wav::write_mono(empty / "a.wav", {synthetic_speech(16000, 1), 16000});
  CHECK(render_dataset(scenes, empty, cfg, fresh_dir("out_speech")).size() == 3);
}

TEST_CASE("split by room") {
  const auto scenes = sample_scenes(30, 2);
  std::vector<SampleRecord> recs(30);
  for (std::size_t i = 0; i < 30; ++i) {
    recs[i].scene_id = i;
    recs[i].room_id = scenes[i].room_index;
  }
  const Split s = split_by_room(recs, 0.2, 1);
  CHECK(s.train.size() + s.test.size() == 30);
  CHECK(s.test.size() == 6);
  for (auto i : s.test) {
    for (auto j : s.train) CHECK(recs[i].room_id != recs[j].room_id);
  }
}

TEST_CASE("tracking a constant plane wave") {
  const Direction truth{0.5, 0.2};
  const std::size_t len = 256 + 60 * 128;
  const FoaSignal s = encode_plane_wave(speech_shaped_mono(len, 3), truth);
  MusicConfig mc;
  mc.stft = {256, 128};
  const SphereGrid grid = build_grid(10);
  const TrackResult t = track(grid, mc, s, truth, 4);
  REQUIRE(t.errors.size() > 3);
  CHECK(t.timestamps.size() == t.predictions.size());
  const double mean = summarize_errors(t.errors).mean;
  double var = 0.0;
  for (double e : t.errors) var += (e - mean) * (e - mean);
  CHECK(std::sqrt(var / t.errors.size()) < 1.0);
  for (std::size_t i = 1; i < t.timestamps.size(); ++i) CHECK(t.timestamps[i] > t.timestamps[i - 1]);

  const TrackResult one = track(grid, mc, s, truth, len);
  CHECK(one.errors.size() == 1);

  std::ostringstream csv, svg;
  write_track_csv(csv, {"music"}, {t});
  write_track_svg(svg, {"music"}, {t});
  CHECK(svg.str().find("<polyline") != std::string::npos);
}

TEST_CASE("comparison table") {
  MethodEvaluation img{PropagationMethod::image, "cartesian", {1, 2, 3}, {10, 20, 30}};
  MethodEvaluation tr{PropagationMethod::trace, "cartesian", {1, 2, 3}, {10, 20, 30}};
  auto rows = build_comparison({img, tr});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].improvement_pct == 0.0);
  tr.errors_deg = {5, 10, 15};
  rows = build_comparison({img, tr});
  CHECK(rows[1].improvement_pct == doctest::Approx(50.0));
  MethodEvaluation other = tr;
  other.test_scene_ids = {1, 2, 4};
  CHECK_THROWS_AS(build_comparison({img, other}), std::invalid_argument);

  std::vector<MethodEvaluation> evals;
  for (auto m : {PropagationMethod::image, PropagationMethod::trace}) {
    for (const char* f : {"categorical", "cartesian", "spherical"}) evals.push_back({m, f, {7}, {12.0}});
  }
  rows = build_comparison(evals);
  CHECK(rows.size() == 6);
  std::ostringstream os;
  write_comparison_csv(os, rows);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}

TEST_CASE("compare_methods rejects mismatched manifests") {
  const fs::path d = fresh_dir("mismatch");
  SampleRecord r;
  r.features_path = "x.adoa";
  write_manifest(d / "a.jsonl", {r, r});
  write_manifest(d / "b.jsonl", {r});
  CHECK_THROWS_AS(compare_methods(d / "a.jsonl", d / "b.jsonl", {}), std::invalid_argument);
  SampleRecord q = r;
  q.label = {1.0, 0.0};
  write_manifest(d / "b.jsonl", {r, q});
  CHECK_THROWS_AS(compare_methods(d / "a.jsonl", d / "b.jsonl", {}), std::invalid_argument);
}

TEST_CASE("compare_methods end to end") {
  const auto scenes = sample_scenes(24, 21);
  const fs::path a = fresh_dir("cmp_img"), b = fresh_dir("cmp_trace");
  render_dataset(scenes, {}, small_render(PropagationMethod::image), a);
  render_dataset(scenes, {}, small_render(PropagationMethod::trace), b);
  CompareConfig cfg;
  cfg.train.epochs = 1;
  cfg.grid_resolution_deg = 30;
  const auto rows = compare_methods(a / "manifest.jsonl", b / "manifest.jsonl", cfg);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.summary.count > 0);
    if (r.method == PropagationMethod::image) CHECK(r.improvement_pct == 0.0);
  }
}

TEST_CASE("trained model tracks better than an untrained one") {
  const NetworkConfig net_cfg = NetworkConfig::desk();
  const StftConfig sc = net_cfg.stft();
  const std::size_t len = sc.samples_for(net_cfg.frames);
  std::vector<LabeledSample> data;
  std::size_t k = 0;
  for (const auto& d : random_directions(160, 31)) {
    const FoaSignal clean = encode_plane_wave(synthetic_speech(len, 100 + k), d);
    const FoaSignal mixed = mix_noise(clean, speech_shaped_noise(len, 500 + k), 15.0);
    data.push_back({intensity_features(stft(mixed, net_cfg.frames, sc)), d});
    ++k;
  }
  TrainConfig tc;
  tc.epochs = 6;
  const TrainResult trained = train(data, {}, Formulation::cartesian(), net_cfg, tc);
  const Network untrained(net_cfg, Formulation::cartesian(), tc.seed);

  const Direction truth{deg2rad(40), deg2rad(15)};
  const FoaSignal sig =
      mix_noise(encode_plane_wave(synthetic_speech(sc.samples_for(60), 7), truth), speech_shaped_noise(sc.samples_for(60), 8), 15.0);
  const double e_trained = summarize_errors(track(trained.network, sig, truth, 5).errors).mean;
  const double e_untrained = summarize_errors(track(untrained, sig, truth, 5).errors).mean;
  MESSAGE("tracked mean error trained " << e_trained << " untrained " << e_untrained);
  CHECK(e_trained <= e_untrained);
}
