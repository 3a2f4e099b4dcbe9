#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambidoa/acoustics.hpp"
#include "ambidoa/dsp.hpp"
#include "ambidoa/estimator.hpp"
#include "ambidoa/music.hpp"

namespace ambidoa {

enum class PropagationMethod { image, trace };

std::string method_name(PropagationMethod m);
// "image" | "trace"; throws std::invalid_argument otherwise.
PropagationMethod parse_method(const std::string& name);

// ---------------------------------------------------------------------------
// Scene batches: {"rooms": [{dims, absorption, scattering, speed_of_sound,
// pairs: [{source, listener}]}], "seed": s}. Consecutive scenes sharing a
// room_index form one room.

nlohmann::json scenes_to_json(const std::vector<Scene>& scenes, std::uint64_t seed);
std::vector<Scene> scenes_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Manifests

struct SampleRecord {
  std::string features_path;  // relative to the manifest directory
  Direction label;
  std::size_t scene_id = 0;
  std::size_t room_id = 0;
  double snr_db = 0.0;
  PropagationMethod method = PropagationMethod::image;

  nlohmann::json to_json() const;
  static SampleRecord from_json(const nlohmann::json& j);
};

// JSON lines, one record per line.
void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);

// Reads each record's features relative to `base_dir`. Throws
// std::runtime_error naming a missing file.
std::vector<LabeledSample> load_samples(const std::filesystem::path& base_dir,
                                        const std::vector<SampleRecord>& records);

// ---------------------------------------------------------------------------
// Rendering

struct RenderConfig {
  PropagationMethod method = PropagationMethod::image;
  int max_order = 10;
  TraceParams trace{.n_rays = 4000, .max_bounces = 50};
  double sample_rate = kDefaultSampleRate;
  double clip_seconds = 1.0;
  double ir_seconds = 1.0;
  StftConfig stft{256, 128};
  std::size_t frames = 25;
  // Use the built-in speech stand-in instead of WAV files.
  bool synthetic_speech = false;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
};

// Per scene: propagate, encode the SRIR, convolve a random 1-s dry clip,
// add speech-shaped or babble noise at a sampled SNR, STFT, features.
// Writes features/sample_NNNNNN.adoa and manifest.jsonl under out_dir.
// Throws std::invalid_argument when speech_dir holds no WAV files and
// synthetic speech is off, or when a WAV is not at cfg.sample_rate.
std::vector<SampleRecord> render_dataset(const std::vector<Scene>& scenes,
                                         const std::filesystem::path& speech_dir, const RenderConfig& cfg,
                                         const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Metrics

// great_circle(pred, truth) in degrees.
double angular_error(const Direction& pred, const Direction& truth);

// Percent of errors strictly below each threshold. Throws on empty input.
std::vector<double> tolerance_accuracy(const std::vector<double>& errors_deg,
                                       const std::vector<double>& thresholds_deg = {5.0, 10.0, 15.0});

struct ErrorSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  std::array<double, 3> accuracy{};  // <5, <10, <15 degrees
};
ErrorSummary summarize_errors(const std::vector<double>& errors_deg);

// Splits by room: a seeded shuffle of the room ids, the last
// `test_fraction` of rooms (at least one) go to the test side.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split split_by_room(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Tracking

struct TrackResult {
  std::vector<double> timestamps;  // seconds
  std::vector<Direction> predictions;
  std::vector<double> errors;  // degrees
};

inline constexpr std::size_t kTrackWindowFrames = 25;

// Estimates one direction from the window centered at a frame.
using WindowEstimator = std::function<Direction(const Spectrogram&, std::size_t center_frame)>;

// Slides a 25-frame window by hop_frames; the first center is frame 12.
// Throws std::invalid_argument if the signal holds fewer than 25 frames.
TrackResult track(const WindowEstimator& estimator, const FoaSignal& signal, const Direction& truth,
                  std::size_t hop_frames, const StftConfig& stft_cfg);
TrackResult track(const Network& net, const FoaSignal& signal, const Direction& truth, std::size_t hop_frames);
TrackResult track(const SphereGrid& grid, const MusicConfig& music_cfg, const FoaSignal& signal,
                  const Direction& truth, std::size_t hop_frames);

void write_track_csv(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<TrackResult>& tracks);
// Line chart of angular error against time, one series per track.
void write_track_svg(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<TrackResult>& tracks);

// ---------------------------------------------------------------------------
// Method comparison

struct MethodEvaluation {
  PropagationMethod method = PropagationMethod::image;
  std::string formulation;
  std::vector<std::size_t> test_scene_ids;
  std::vector<double> errors_deg;
};

struct ComparisonRow {
  PropagationMethod method = PropagationMethod::image;
  std::string formulation;
  ErrorSummary summary;
  // (baseline mean - mean) / baseline mean * 100, baseline = image rows.
  double improvement_pct = 0.0;
};

// One row per evaluation. Throws std::invalid_argument when evaluations
// were made on different test scenes or a formulation lacks an image row.
std::vector<ComparisonRow> build_comparison(const std::vector<MethodEvaluation>& evals);

struct CompareConfig {
  std::vector<std::string> formulations{"categorical", "cartesian", "spherical"};
  double grid_resolution_deg = 10.0;
  NetworkConfig network = NetworkConfig::desk();
  TrainConfig train{};
  double test_fraction = 0.2;
};

// Trains one model per (method, formulation) on the training rooms of each
// manifest and evaluates all on the trace manifest's test rooms. Both
// manifests must describe the same scenes with the same labels.
std::vector<ComparisonRow> compare_methods(const std::filesystem::path& image_manifest,
                                           const std::filesystem::path& trace_manifest,
                                           const CompareConfig& cfg);

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);
void print_comparison(std::ostream& os, const std::vector<ComparisonRow>& rows);

}  // namespace ambidoa
