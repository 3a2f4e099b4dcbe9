#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambidoa/dsp.hpp"
#include "ambidoa/layers.hpp"
#include "ambidoa/spheregrid.hpp"

namespace ambidoa {

enum class FormulationKind { categorical, cartesian, spherical };

// Output head selector. Categorical heads own the class grid.
class Formulation {
 public:
  static Formulation categorical(double resolution_deg);
  static Formulation cartesian();
  static Formulation spherical();
  // "categorical" | "cartesian" | "spherical"; throws on anything else.
  static Formulation parse(const std::string& name, double resolution_deg = 10.0);

  FormulationKind kind() const { return kind_; }
  std::string name() const;
  std::size_t output_dim() const;
  const SphereGrid& grid() const;
  double grid_resolution_deg() const { return grid_ ? grid_->resolution_deg() : 0.0; }

 private:
  FormulationKind kind_ = FormulationKind::cartesian;
  std::shared_ptr<const SphereGrid> grid_;
};

// Per-sample training target; which field is used depends on the formulation.
struct Target {
  Direction direction;
  std::size_t class_index = 0;

  static Target from_direction(const Direction& d, const Formulation& f);
};

struct NetworkConfig {
  std::size_t input_channels = 6;
  std::size_t frames = 25;
  std::size_t freq_bins = 129;
  std::size_t kernel = 3;
  std::vector<std::size_t> conv_channels{8, 8, 8};
  std::vector<std::size_t> pool{4, 4, 4};
  std::size_t hidden = 16;
  std::size_t recurrent_layers = 2;
  std::size_t fc_width = 16;
  double bn_momentum = 0.9;

  // 64-channel stages on 6x25x513 (outputs 64x25x64, 64x25x8, 64x25x2).
  static NetworkConfig paper();
  // 8-channel stages on 6x25x129 (256-point STFT).
  static NetworkConfig desk();
  // 2 conv channels, hidden 8, 3 frames, 16 bins: for gradient checks.
  static NetworkConfig tiny();
  static NetworkConfig preset(const std::string& name);

  // [channels, frames, freq] after each conv stage.
  std::vector<std::array<std::size_t, 3>> stage_shapes() const;
  std::size_t flattened_width() const;
  void validate() const;
  // STFT matching freq_bins (window = 2 * (bins - 1), 50% overlap).
  StftConfig stft() const;

  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
};

// frames x d_out
struct FrameOutputs {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t k) const { return values[t * dim + k]; }
};

class Network {
 public:
  Network(NetworkConfig config, Formulation formulation, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  const Formulation& formulation() const { return formulation_; }

  // Inference mode (running batch-norm statistics). Throws
  // std::invalid_argument on a shape mismatch. Safe to call concurrently.
  FrameOutputs forward(const FeatureTensor& x) const;

  // Inference on a prepared [B, 6, T, F] batch; returns [B, T, d_out].
  nn::Tensor forward_batch(const nn::Tensor& x) const;

  // Training-mode pass: batch statistics, caches activations, returns the
  // mean loss over the batch and accumulates parameter gradients.
  // Throws std::runtime_error naming the layer on a non-finite gradient.
  double forward_backward(const nn::Tensor& x, std::span<const Target> targets,
                          bool update_running_stats = true);

  // Mean loss in training mode without touching gradients or running stats.
  double training_loss(const nn::Tensor& x, std::span<const Target> targets) const;

  // ReLU signs and max-pool winners of a training-mode pass; equal patterns
  // mean two inputs lie in the same differentiable region.
  std::vector<std::uint32_t> activation_pattern(const nn::Tensor& x) const;

  std::vector<nn::Param*> parameters();
  std::vector<const nn::Param*> parameters() const;
  void zero_grad();
  std::size_t param_count() const;
  // Parameters of everything except the final affine layer.
  std::size_t trunk_param_count() const;

  // Running batch-norm state (checkpointed with the parameters).
  std::vector<std::vector<double>*> buffers();
  std::vector<const std::vector<double>*> buffers() const;

  nn::Dense& output_layer() { return fc_.back(); }

 private:
  struct Activations;
  nn::Tensor run(const nn::Tensor& x, bool training, Activations* acts) const;
  void check_input(const nn::Tensor& x) const;

  NetworkConfig config_;
  Formulation formulation_;
  std::vector<nn::Conv2d> conv_;
  std::vector<nn::BatchNorm2d> bn_;
  std::vector<nn::Lstm> lstm_;  // [layer0 fwd, layer0 bwd, layer1 fwd, ...]
  std::vector<nn::Dense> fc_;
};

// Packs feature tensors into a [B, 6, T, F] batch.
nn::Tensor make_batch(std::span<const FeatureTensor* const> samples);

// ---------------------------------------------------------------------------
// Losses on one sample's per-frame outputs. Each returns the loss and, when
// `grad` is non-null, writes d(loss)/d(outputs) (same layout as outputs).

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kHaversineClamp = 1e-12;

// Binary cross-entropy summed over classes, averaged over frames.
double loss_categorical(std::span<const double> probs, std::size_t frames, std::size_t classes,
                        std::size_t class_index, std::vector<double>* grad = nullptr);
// Mean over frames and the 3 components; outputs are not renormalized.
double loss_cartesian(std::span<const double> outputs, std::size_t frames, const Vec3& label,
                      std::vector<double>* grad = nullptr);
// Mean haversine distance (r = 1) with h clamped to [eps, 1 - eps].
double loss_haversine(std::span<const double> outputs, std::size_t frames, const Direction& label,
                      std::vector<double>* grad = nullptr);

double sample_loss(const Formulation& f, std::span<const double> outputs, std::size_t frames,
                   const Target& target, std::vector<double>* grad = nullptr);

// Max relative error between analytic gradients and central differences
// (step 1e-4) over every parameter; training-mode batch statistics. The
// denominator is floored at 1e-6 * max(1, |loss|). Coordinates whose +-step
// perturbation changes a ReLU sign or max-pool winner straddle a
// non-differentiable point and are counted in `skipped` instead.
struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};
GradCheckReport grad_check(const Network& net, const FeatureTensor& x, const Target& target,
                           double step = 1e-4);

// ---------------------------------------------------------------------------
// Decoding and inference

// Cartesian: normalized mean vector. Spherical: circular-mean azimuth and
// mean elevation. Categorical: argmax of summed scores (ties: lowest index).
// Throws std::runtime_error if the averaged vector is shorter than 1e-6.
Direction decode_outputs(const FrameOutputs& outputs, const Formulation& f);

// Runs the network on the window of config().frames frames centered at
// `center_frame` (start = center - frames/2). Throws std::out_of_range if
// the window does not fit.
Direction predict_window(const Network& net, const Spectrogram& spec, std::size_t center_frame);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  nlohmann::json to_json() const;
};

struct LabeledSample {
  FeatureTensor features;
  Direction label;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_mean_error_deg = 0.0;
};

struct TrainHistory {
  double initial_train_loss = 0.0;
  std::vector<EpochStats> epochs;
};

// Adaptive-moment optimizer state for one network.
class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}
  void step(Network& net);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

// Deterministic for a fixed cfg.seed. Throws std::runtime_error if the loss
// becomes non-finite.
struct TrainResult {
  Network network;
  TrainHistory history;
};
TrainResult train(std::span<const LabeledSample> train_set,
                  std::span<const LabeledSample> validation_set, const Formulation& formulation,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg);

// Mean loss (inference mode) and per-sample angular errors (degrees).
struct Evaluation {
  double mean_loss = 0.0;
  std::vector<double> errors_deg;
  std::vector<Direction> predictions;
};
Evaluation evaluate(const Network& net, std::span<const LabeledSample> samples);

// ---------------------------------------------------------------------------
// Checkpoint: "ADOM", u32 version, u64 json length, json block, u64 count,
// count little-endian float64 values (parameters, then batch-norm buffers).

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const nlohmann::json& extra = {});
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace ambidoa
