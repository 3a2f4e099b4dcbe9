#include "ambidoa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ambidoa/features_io.hpp"
#include "ambidoa/wav.hpp"

namespace fs = std::filesystem;

namespace ambidoa {

std::string method_name(PropagationMethod m) { return m == PropagationMethod::image ? "image" : "trace"; }

PropagationMethod parse_method(const std::string& name) {
  if (name == "image") return PropagationMethod::image;
  if (name == "trace") return PropagationMethod::trace;
  throw std::invalid_argument("unknown propagation method '" + name + "' (expected image|trace)");
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

nlohmann::json scenes_to_json(const std::vector<Scene>& scenes, std::uint64_t seed) {
  nlohmann::json rooms = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    if (i == 0 || s.room_index != scenes[i - 1].room_index) {
      rooms.push_back({{"dims", vec_json(s.room.dims)},
                       {"absorption", s.room.absorption},
                       {"scattering", s.room.scattering},
                       {"speed_of_sound", s.room.speed_of_sound},
                       {"pairs", nlohmann::json::array()}});
    }
    rooms.back()["pairs"].push_back({{"source", vec_json(s.source)}, {"listener", vec_json(s.listener)}});
  }
  return {{"rooms", rooms}, {"seed", seed}};
}

std::vector<Scene> scenes_from_json(const nlohmann::json& j) {
  std::vector<Scene> scenes;
  std::size_t room_index = 0;
  for (const auto& r : j.at("rooms")) {
    RoomConfig room;
    room.dims = json_vec(r.at("dims"));
    room.absorption = r.at("absorption").get<std::array<double, 6>>();
    room.scattering = r.at("scattering").get<double>();
    room.speed_of_sound = r.value("speed_of_sound", kSpeedOfSound);
    room.validate();
    for (const auto& p : r.at("pairs")) {
      Scene s;
      s.room = room;
      s.source = json_vec(p.at("source"));
      s.listener = json_vec(p.at("listener"));
      s.room_index = room_index;
      s.validate();
      scenes.push_back(s);
    }
    ++room_index;
  }
  return scenes;
}

nlohmann::json SampleRecord::to_json() const {
  return {{"features_path", features_path},
          {"azimuth_deg", rad2deg(label.azimuth)},
          {"elevation_deg", rad2deg(label.elevation)},
          {"scene_id", scene_id},
          {"room_id", room_id},
          {"snr_db", snr_db},
          {"method", method_name(method)}};
}

SampleRecord SampleRecord::from_json(const nlohmann::json& j) {
  SampleRecord r;
  r.features_path = j.at("features_path").get<std::string>();
  r.label = {deg2rad(j.at("azimuth_deg").get<double>()), deg2rad(j.at("elevation_deg").get<double>())};
  r.scene_id = j.at("scene_id").get<std::size_t>();
  r.room_id = j.value("room_id", r.scene_id);
  r.snr_db = j.value("snr_db", 0.0);
  r.method = parse_method(j.value("method", std::string("image")));
  return r;
}

void write_manifest(const fs::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_manifest: cannot open " + path.string());
  for (const auto& r : records) os << r.to_json().dump() << '\n';
  if (!os) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

std::vector<SampleRecord> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_manifest: cannot open " + path.string());
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(SampleRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_manifest: " + path.string() + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

std::vector<LabeledSample> load_samples(const fs::path& base_dir, const std::vector<SampleRecord>& records) {
  std::vector<LabeledSample> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const fs::path p = base_dir / records[i].features_path;
    if (!fs::exists(p)) throw std::runtime_error("load_samples: missing features file " + p.string());
    out[i].features = read_features(p);
    out[i].label = records[i].label;
  }
  return out;
}

nlohmann::json RenderConfig::to_json() const {
  return {{"method", method_name(method)},
          {"max_order", max_order},
          {"n_rays", trace.n_rays},
          {"max_bounces", trace.max_bounces},
          {"receiver_radius", trace.receiver_radius},
          {"sample_rate", sample_rate},
          {"clip_seconds", clip_seconds},
          {"ir_seconds", ir_seconds},
          {"stft_window", stft.window},
          {"stft_hop", stft.hop},
          {"frames", frames},
          {"synthetic_speech", synthetic_speech},
          {"seed", seed}};
}

namespace {

std::vector<wav::MonoAudio> load_speech(const fs::path& dir, double sample_rate) {
  std::vector<fs::path> files;
  if (!dir.empty() && fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (e.is_regular_file() && ext == ".wav") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::invalid_argument("render_dataset: no WAV files in speech directory '" + dir.string() +
                                "' (use synthetic speech instead)");
  }
  std::vector<wav::MonoAudio> clips;
  for (const auto& f : files) {
    auto a = wav::read_mono(f);
    if (a.sample_rate != sample_rate) {
      throw std::invalid_argument("render_dataset: " + f.string() + " is not at " +
                                  std::to_string(static_cast<int>(sample_rate)) + " Hz");
    }
    if (a.samples.empty()) throw std::invalid_argument("render_dataset: empty WAV " + f.string());
    clips.push_back(std::move(a));
  }
  return clips;
}

std::string sample_name(std::size_t i) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "features/sample_%06zu.adoa", i);
  return buf;
}

}  // namespace

std::vector<SampleRecord> render_dataset(const std::vector<Scene>& scenes, const fs::path& speech_dir,
                                         const RenderConfig& cfg, const fs::path& out_dir) {
  const auto clip_len = static_cast<std::size_t>(std::llround(cfg.clip_seconds * cfg.sample_rate));
  const auto ir_len = static_cast<std::size_t>(std::llround(cfg.ir_seconds * cfg.sample_rate));
  if (clip_len < cfg.stft.samples_for(cfg.frames)) {
    throw std::invalid_argument("render_dataset: clip shorter than the feature window");
  }
  std::vector<wav::MonoAudio> speech;
  if (!cfg.synthetic_speech) speech = load_speech(speech_dir, cfg.sample_rate);
  fs::create_directories(out_dir / "features");

  std::vector<SampleRecord> records(scenes.size());
  std::vector<std::string> errors(scenes.size());
  auto render_one = [&](std::size_t i) {
    const Scene& scene = scenes[i];
    std::mt19937_64 rng(mix_seed(cfg.seed, i));
    // Drawn for both methods so speech and noise match across them.
    const std::uint64_t trace_seed = rng();

    std::vector<AcousticPath> paths;
    if (cfg.method == PropagationMethod::image) {
      paths = image_source_paths(scene, cfg.max_order);
    } else {
      TraceParams tp = cfg.trace;
      tp.rng_seed = trace_seed;
      tp.max_delay = cfg.ir_seconds;
      paths = trace_paths(scene, tp, Exec::serial);
    }
    // Keep arrivals that fit in the SRIR.
    std::erase_if(paths, [&](const AcousticPath& p) {
      return std::llround(p.delay * cfg.sample_rate) >= static_cast<long long>(ir_len);
    });
    const FoaIR ir = encode_srir(paths, cfg.sample_rate, ir_len);

    std::vector<double> dry(clip_len, 0.0);
    const std::uint64_t speech_seed = rng();
    if (cfg.synthetic_speech) {
      dry = synthetic_speech(clip_len, speech_seed, cfg.sample_rate);
    } else {
      std::mt19937_64 srng(speech_seed);
      const auto& clip = speech[std::uniform_int_distribution<std::size_t>(0, speech.size() - 1)(srng)];
      const std::size_t span = clip.samples.size() > clip_len ? clip.samples.size() - clip_len : 0;
      const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, span)(srng);
      const std::size_t n = std::min(clip_len, clip.samples.size() - offset);
      std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(offset), n, dry.begin());
    }

    FoaSignal wet = convolve_foa(dry, cfg.sample_rate, ir, Exec::serial);
    for (auto& ch : wet.channels) ch.resize(clip_len);

    const bool babble = std::bernoulli_distribution(0.5)(rng);
    const std::uint64_t noise_seed = rng();
    const FoaSignal noise = babble ? babble_noise(clip_len, noise_seed, cfg.sample_rate)
                                   : speech_shaped_noise(clip_len, noise_seed, cfg.sample_rate);
    const double snr = sample_snr(rng);
    const FoaSignal mixed = mix_noise(wet, noise, snr);

    const Spectrogram spec = stft(mixed, cfg.frames, cfg.stft);
    const FeatureTensor feats = intensity_features(spec, Exec::serial);

    SampleRecord& rec = records[i];
    rec.features_path = sample_name(i);
    write_features(out_dir / rec.features_path, feats);
    rec.label = scene.source_direction();
    rec.scene_id = i;
    rec.room_id = scene.room_index;
    rec.snr_db = snr;
    rec.method = cfg.method;
  };

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(scenes.size()); ++i) {
    try {
      render_one(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("render_dataset: scene " + std::to_string(i) + ": " + errors[i]);
  }
  write_manifest(out_dir / "manifest.jsonl", records);
  return records;
}

double angular_error(const Direction& pred, const Direction& truth) { return rad2deg(great_circle(pred, truth)); }

std::vector<double> tolerance_accuracy(const std::vector<double>& errors_deg,
                                       const std::vector<double>& thresholds_deg) {
  if (errors_deg.empty()) throw std::invalid_argument("tolerance_accuracy: empty error list");
  std::vector<double> out;
  for (double th : thresholds_deg) {
    const auto n = std::count_if(errors_deg.begin(), errors_deg.end(), [&](double e) { return e < th; });
    out.push_back(100.0 * static_cast<double>(n) / static_cast<double>(errors_deg.size()));
  }
  return out;
}

ErrorSummary summarize_errors(const std::vector<double>& errors_deg) {
  ErrorSummary s;
  if (errors_deg.empty()) throw std::invalid_argument("summarize_errors: empty error list");
  s.count = errors_deg.size();
  s.mean = std::accumulate(errors_deg.begin(), errors_deg.end(), 0.0) / static_cast<double>(s.count);
  std::vector<double> sorted = errors_deg;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = s.count / 2;
  s.median = s.count % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  const auto acc = tolerance_accuracy(errors_deg);
  std::copy(acc.begin(), acc.end(), s.accuracy.begin());
  return s;
}

Split split_by_room(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split_by_room: test fraction must be in (0, 1)");
  }
  std::set<std::size_t> room_set;
  for (const auto& r : records) room_set.insert(r.room_id);
  std::vector<std::size_t> rooms(room_set.begin(), room_set.end());
  if (rooms.size() < 2) throw std::invalid_argument("split_by_room: need at least 2 rooms");
  std::mt19937_64 rng(seed);
  std::shuffle(rooms.begin(), rooms.end(), rng);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rooms.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, rooms.size() - 1);
  const std::set<std::size_t> test_rooms(rooms.end() - static_cast<std::ptrdiff_t>(n_test), rooms.end());
  Split split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (test_rooms.count(records[i].room_id) ? split.test : split.train).push_back(i);
  }
  return split;
}

TrackResult track(const WindowEstimator& estimator, const FoaSignal& signal, const Direction& truth,
                  std::size_t hop_frames, const StftConfig& stft_cfg) {
  if (hop_frames == 0) throw std::invalid_argument("track: hop must be >= 1 frame");
  if (signal.length() < stft_cfg.samples_for(kTrackWindowFrames)) {
    throw std::invalid_argument("track: signal shorter than one 25-frame window");
  }
  const std::size_t frames = (signal.length() - stft_cfg.window) / stft_cfg.hop + 1;
  Spectrogram spec = stft(signal, frames, stft_cfg);
  spec.sample_rate = signal.sample_rate;
  const std::size_t half = kTrackWindowFrames / 2;
  const std::size_t last_center = frames - kTrackWindowFrames + half;
  TrackResult res;
  for (std::size_t c = half; c <= last_center; c += hop_frames) {
    const Direction pred = estimator(spec, c);
    res.timestamps.push_back(static_cast<double>(c * stft_cfg.hop + stft_cfg.window / 2) / signal.sample_rate);
    res.predictions.push_back(pred);
    res.errors.push_back(angular_error(pred, truth));
  }
  return res;
}

TrackResult track(const Network& net, const FoaSignal& signal, const Direction& truth, std::size_t hop_frames) {
  if (net.config().frames != kTrackWindowFrames) throw std::invalid_argument("track: network must take 25 frames");
  return track([&](const Spectrogram& spec, std::size_t c) { return predict_window(net, spec, c); }, signal,
               truth, hop_frames, net.config().stft());
}

TrackResult track(const SphereGrid& grid, const MusicConfig& music_cfg, const FoaSignal& signal,
                  const Direction& truth, std::size_t hop_frames) {
  return track(
      [&](const Spectrogram& spec, std::size_t c) {
        const std::size_t begin = c - kTrackWindowFrames / 2;
        return music_estimate_window(spec, begin, begin + kTrackWindowFrames, grid, music_cfg).direction;
      },
      signal, truth, hop_frames, music_cfg.stft);
}

void write_track_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<TrackResult>& tracks) {
  os << "series,time_s,azimuth_deg,elevation_deg,error_deg\n";
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const auto& t = tracks[k];
    for (std::size_t i = 0; i < t.timestamps.size(); ++i) {
      os << names.at(k) << ',' << t.timestamps[i] << ',' << rad2deg(t.predictions[i].azimuth) << ','
         << rad2deg(t.predictions[i].elevation) << ',' << t.errors[i] << '\n';
    }
  }
}

void write_track_svg(std::ostream& os, const std::vector<std::string>& names, const std::vector<TrackResult>& tracks) {
  constexpr double W = 720, H = 360, L = 60, R = 150, T = 20, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double t_max = 0.0, e_max = 10.0;
  for (const auto& t : tracks) {
    for (double v : t.timestamps) t_max = std::max(t_max, v);
    for (double v : t.errors) e_max = std::max(e_max, v);
  }
  if (t_max <= 0.0) t_max = 1.0;
  e_max = std::ceil(e_max / 10.0) * 10.0;
  auto px = [&](double t) { return L + (W - L - R) * t / t_max; };
  auto py = [&](double e) { return H - B - (H - T - B) * e / e_max; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double e = e_max * i / 4.0, t = t_max * i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">" << e << "</text>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << std::setprecision(3)
       << t << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">time (s)</text>\n";
  os << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 15 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\">angular error (deg)</text>\n";
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const char* color = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < tracks[k].timestamps.size(); ++i) {
      os << px(tracks[k].timestamps[i]) << ',' << py(tracks[k].errors[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 16 * static_cast<double>(k + 1);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 35 << "\" y=\"" << ly << "\">" << names.at(k) << "</text>\n";
  }
  os << "</svg>\n";
}

std::vector<ComparisonRow> build_comparison(const std::vector<MethodEvaluation>& evals) {
  if (evals.empty()) throw std::invalid_argument("build_comparison: no evaluations");
  const auto& ref_ids = evals.front().test_scene_ids;
  for (const auto& e : evals) {
    if (e.test_scene_ids != ref_ids || e.errors_deg.size() != ref_ids.size()) {
      throw std::invalid_argument("build_comparison: evaluations use mismatched test sets");
    }
  }
  std::map<std::string, double> baseline;
  for (const auto& e : evals) {
    if (e.method == PropagationMethod::image) baseline[e.formulation] = summarize_errors(e.errors_deg).mean;
  }
  std::vector<ComparisonRow> rows;
  for (const auto& e : evals) {
    ComparisonRow row;
    row.method = e.method;
    row.formulation = e.formulation;
    row.summary = summarize_errors(e.errors_deg);
    const auto it = baseline.find(e.formulation);
    if (it == baseline.end()) {
      throw std::invalid_argument("build_comparison: no image baseline for " + e.formulation);
    }
    row.improvement_pct = it->second > 0.0 ? (it->second - row.summary.mean) / it->second * 100.0 : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ComparisonRow> compare_methods(const fs::path& image_manifest, const fs::path& trace_manifest,
                                           const CompareConfig& cfg) {
  const auto image_records = read_manifest(image_manifest);
  const auto trace_records = read_manifest(trace_manifest);
  if (image_records.size() != trace_records.size()) {
    throw std::invalid_argument("compare_methods: manifests describe different scene sets");
  }
  for (std::size_t i = 0; i < image_records.size(); ++i) {
    const auto& a = image_records[i];
    const auto& b = trace_records[i];
    if (a.scene_id != b.scene_id || a.room_id != b.room_id || great_circle(a.label, b.label) > 1e-9) {
      throw std::invalid_argument("compare_methods: test sets do not match at scene " + std::to_string(a.scene_id));
    }
  }
  const Split split = split_by_room(trace_records, cfg.test_fraction, cfg.train.seed);
  const auto image_samples = load_samples(image_manifest.parent_path(), image_records);
  const auto trace_samples = load_samples(trace_manifest.parent_path(), trace_records);

  auto pick = [](const std::vector<LabeledSample>& all, const std::vector<std::size_t>& idx) {
    std::vector<LabeledSample> out;
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
  };
  const auto test = pick(trace_samples, split.test);
  std::vector<std::size_t> test_ids;
  for (std::size_t i : split.test) test_ids.push_back(trace_records[i].scene_id);

  std::vector<MethodEvaluation> evals;
  for (const auto method : {PropagationMethod::image, PropagationMethod::trace}) {
    const auto train_set = pick(method == PropagationMethod::image ? image_samples : trace_samples, split.train);
    for (const auto& name : cfg.formulations) {
      const Formulation f = Formulation::parse(name, cfg.grid_resolution_deg);
      const TrainResult tr = train(train_set, {}, f, cfg.network, cfg.train);
      MethodEvaluation ev;
      ev.method = method;
      ev.formulation = f.name();
      ev.test_scene_ids = test_ids;
      ev.errors_deg = evaluate(tr.network, test).errors_deg;
      evals.push_back(std::move(ev));
    }
  }
  return build_comparison(evals);
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "method,formulation,count,mean_error_deg,median_error_deg,acc_lt5_pct,acc_lt10_pct,acc_lt15_pct,"
        "improvement_pct\n";
  for (const auto& r : rows) {
    os << method_name(r.method) << ',' << r.formulation << ',' << r.summary.count << ',' << r.summary.mean << ','
       << r.summary.median << ',' << r.summary.accuracy[0] << ',' << r.summary.accuracy[1] << ','
       << r.summary.accuracy[2] << ',' << r.improvement_pct << '\n';
  }
}

void print_comparison(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  const auto flags = os.flags();
  os << std::left << std::setw(8) << "method" << std::setw(13) << "formulation" << std::right << std::setw(7)
     << "n" << std::setw(10) << "mean" << std::setw(10) << "median" << std::setw(8) << "<5" << std::setw(8)
     << "<10" << std::setw(8) << "<15" << std::setw(10) << "improv%" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << method_name(r.method) << std::setw(13) << r.formulation << std::right
       << std::setw(7) << r.summary.count << std::setw(10) << r.summary.mean << std::setw(10) << r.summary.median
       << std::setw(8) << r.summary.accuracy[0] << std::setw(8) << r.summary.accuracy[1] << std::setw(8)
       << r.summary.accuracy[2] << std::setw(10) << r.improvement_pct << '\n';
  }
  os.flags(flags);
}

}  // namespace ambidoa
