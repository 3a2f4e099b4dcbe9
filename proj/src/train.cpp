#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ambidoa/estimator.hpp"

namespace ambidoa {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("TrainConfig: clip norm must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"epochs", epochs},
          {"seed", seed},                   {"clip_norm", clip_norm},   {"beta1", beta1},
          {"beta2", beta2},                 {"adam_eps", adam_eps}};
}

void Adam::step(Network& net) {
  auto params = net.parameters();
  if (m_.empty()) {
    for (const nn::Param* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const nn::Param* p : params) {
      for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) {
      const double s = cfg_.clip_norm / norm;
      for (nn::Param* p : params) {
        for (double& g : p->grad) g *= s;
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param& p = *params[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m_[i][j] / bc1;
      const double v_hat = v_[i][j] / bc2;
      p.value[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_eps);
    }
  }
}

Evaluation evaluate(const Network& net, std::span<const LabeledSample> samples) {
  Evaluation ev;
  if (samples.empty()) return ev;
  constexpr std::size_t kChunk = 32;
  const std::size_t T = net.config().frames, K = net.formulation().output_dim();
  double loss = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t end = std::min(samples.size(), start + kChunk);
    std::vector<const FeatureTensor*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&samples[i].features);
    const nn::Tensor out = net.forward_batch(make_batch(ptrs));
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t b = i - start;
      FrameOutputs fo;
      fo.frames = T;
      fo.dim = K;
      fo.values.assign(out.data.begin() + static_cast<std::ptrdiff_t>(b * T * K),
                       out.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * T * K));
      const Target target = Target::from_direction(samples[i].label, net.formulation());
      loss += sample_loss(net.formulation(), fo.values, T, target);
      Direction pred;
      try {
        pred = decode_outputs(fo, net.formulation());
      } catch (const std::runtime_error&) {
        // An undecodable output counts as a maximal miss.
        pred = to_spherical(-samples[i].label.unit());
      }
      ev.predictions.push_back(pred);
      ev.errors_deg.push_back(rad2deg(great_circle(pred, samples[i].label)));
    }
  }
  ev.mean_loss = loss / static_cast<double>(samples.size());
  return ev;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TrainResult train(std::span<const LabeledSample> train_set,
                  std::span<const LabeledSample> validation_set, const Formulation& formulation,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  for (const auto& s : train_set) {
    if (s.features.frames != net_cfg.frames || s.features.bins != net_cfg.freq_bins) {
      throw std::invalid_argument("train: feature shape does not match the network configuration");
    }
  }

  TrainResult result{Network(net_cfg, formulation, cfg.seed), {}};
  Network& net = result.network;
  std::vector<Target> targets;
  targets.reserve(train_set.size());
  for (const auto& s : train_set) targets.push_back(Target::from_direction(s.label, formulation));

  result.history.initial_train_loss = evaluate(net, train_set).mean_loss;
  Adam adam(cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const FeatureTensor*> ptrs;
      std::vector<Target> batch_targets;
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(&train_set[order[i]].features);
        batch_targets.push_back(targets[order[i]]);
      }
      net.zero_grad();
      const double loss = net.forward_backward(make_batch(ptrs), batch_targets);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " + std::to_string(epoch) +
                                 ", batch starting at " + std::to_string(start));
      }
      adam.step(net);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = evaluate(net, train_set).mean_loss;
    if (!std::isfinite(stats.train_loss)) {
      throw std::runtime_error("train: loss diverged (non-finite) after epoch " + std::to_string(epoch));
    }
    if (!validation_set.empty()) {
      const Evaluation ev = evaluate(net, validation_set);
      stats.validation_loss = ev.mean_loss;
      stats.validation_mean_error_deg = mean_of(ev.errors_deg);
    }
    result.history.epochs.push_back(stats);
  }
  return result;
}

}  // namespace ambidoa
