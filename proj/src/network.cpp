#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ambidoa/estimator.hpp"

namespace ambidoa {

// ---------------------------------------------------------------------------
// Formulation / Target

Formulation Formulation::categorical(double resolution_deg) {
  Formulation f;
  f.kind_ = FormulationKind::categorical;
  f.grid_ = std::make_shared<const SphereGrid>(build_grid(resolution_deg));
  return f;
}

Formulation Formulation::cartesian() {
  Formulation f;
  f.kind_ = FormulationKind::cartesian;
  return f;
}

Formulation Formulation::spherical() {
  Formulation f;
  f.kind_ = FormulationKind::spherical;
  return f;
}

Formulation Formulation::parse(const std::string& name, double resolution_deg) {
  if (name == "categorical") return categorical(resolution_deg);
  if (name == "cartesian") return cartesian();
  if (name == "spherical") return spherical();
  throw std::invalid_argument("unknown formulation '" + name + "'");
}

std::string Formulation::name() const {
  switch (kind_) {
    case FormulationKind::categorical: return "categorical";
    case FormulationKind::cartesian: return "cartesian";
    case FormulationKind::spherical: return "spherical";
  }
  return "?";
}

std::size_t Formulation::output_dim() const {
  switch (kind_) {
    case FormulationKind::categorical: return grid_->size();
    case FormulationKind::cartesian: return 3;
    case FormulationKind::spherical: return 2;
  }
  return 0;
}

const SphereGrid& Formulation::grid() const {
  if (!grid_) throw std::logic_error("Formulation: only the categorical head has a grid");
  return *grid_;
}

Target Target::from_direction(const Direction& d, const Formulation& f) {
  Target t;
  t.direction = d;
  if (f.kind() == FormulationKind::categorical) t.class_index = f.grid().nearest_class(d);
  return t;
}

// ---------------------------------------------------------------------------
// NetworkConfig

NetworkConfig NetworkConfig::paper() {
  NetworkConfig c;
  c.frames = 25;
  c.freq_bins = 513;
  c.conv_channels = {64, 64, 64};
  c.pool = {8, 8, 4};
  c.hidden = 64;
  c.fc_width = 128;
  return c;
}

NetworkConfig NetworkConfig::desk() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::tiny() {
  NetworkConfig c;
  c.frames = 3;
  c.freq_bins = 16;
  c.conv_channels = {2, 2, 2};
  c.pool = {2, 2, 2};
  c.hidden = 8;
  c.fc_width = 8;
  return c;
}

NetworkConfig NetworkConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  if (name == "tiny") return tiny();
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<std::array<std::size_t, 3>> NetworkConfig::stage_shapes() const {
  std::vector<std::array<std::size_t, 3>> shapes;
  std::size_t f = freq_bins;
  for (std::size_t s = 0; s < conv_channels.size(); ++s) {
    f /= pool[s];
    shapes.push_back({conv_channels[s], frames, f});
  }
  return shapes;
}

std::size_t NetworkConfig::flattened_width() const {
  const auto shapes = stage_shapes();
  return shapes.back()[0] * shapes.back()[2];
}

void NetworkConfig::validate() const {
  if (conv_channels.empty() || conv_channels.size() != pool.size()) {
    throw std::invalid_argument("NetworkConfig: conv_channels and pool must be non-empty and equal length");
  }
  if (input_channels == 0 || frames == 0 || freq_bins == 0 || hidden == 0 || fc_width == 0 ||
      recurrent_layers == 0) {
    throw std::invalid_argument("NetworkConfig: sizes must be positive");
  }
  if (kernel % 2 == 0) throw std::invalid_argument("NetworkConfig: kernel must be odd");
  std::size_t f = freq_bins;
  for (std::size_t p : pool) {
    if (p == 0 || f / p == 0) throw std::invalid_argument("NetworkConfig: pooling collapses the frequency axis");
    f /= p;
  }
}

StftConfig NetworkConfig::stft() const {
  StftConfig s;
  s.window = 2 * (freq_bins - 1);
  s.hop = s.window / 2;
  return s;
}

nlohmann::json NetworkConfig::to_json() const {
  return {{"input_channels", input_channels}, {"frames", frames},
          {"freq_bins", freq_bins},           {"kernel", kernel},
          {"conv_channels", conv_channels},   {"pool", pool},
          {"hidden", hidden},                 {"recurrent_layers", recurrent_layers},
          {"fc_width", fc_width},             {"bn_momentum", bn_momentum}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.input_channels = j.at("input_channels");
  c.frames = j.at("frames");
  c.freq_bins = j.at("freq_bins");
  c.kernel = j.at("kernel");
  c.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
  c.pool = j.at("pool").get<std::vector<std::size_t>>();
  c.hidden = j.at("hidden");
  c.recurrent_layers = j.at("recurrent_layers");
  c.fc_width = j.at("fc_width");
  c.bn_momentum = j.at("bn_momentum");
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Network

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t layer) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (layer + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

struct Network::Activations {
  struct Stage {
    nn::Tensor input, conv_out, relu_out;
    nn::BatchNorm2d::Cache bn;
    nn::PoolCache pool;
  };
  std::vector<Stage> stages;
  std::vector<nn::Tensor> lstm_inputs;            // per recurrent layer
  std::vector<nn::Lstm::Cache> lstm_caches;       // per direction
  std::vector<nn::Tensor> fc_inputs;
  nn::Tensor output;                              // after head activation
};

Network::Network(NetworkConfig config, Formulation formulation, std::uint64_t seed)
    : config_(std::move(config)), formulation_(std::move(formulation)) {
  config_.validate();
  std::uint64_t layer = 0;
  std::size_t in_ch = config_.input_channels;
  for (std::size_t s = 0; s < config_.conv_channels.size(); ++s) {
    const std::string name = "conv" + std::to_string(s);
    nn::Conv2d conv(name, in_ch, config_.conv_channels[s], config_.kernel);
    std::mt19937_64 rng(mix_seed(seed, layer++));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * config_.kernel * config_.kernel));
    conv.weight.init_uniform(rng, bound);
    conv.bias.init_uniform(rng, bound);
    conv_.push_back(std::move(conv));
    bn_.emplace_back("bn" + std::to_string(s), config_.conv_channels[s]);
    in_ch = config_.conv_channels[s];
  }
  std::size_t width = config_.flattened_width();
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
  for (std::size_t l = 0; l < config_.recurrent_layers; ++l) {
    for (bool reverse : {false, true}) {
      nn::Lstm cell("lstm" + std::to_string(l) + (reverse ? ".bwd" : ".fwd"), width, config_.hidden,
                    reverse);
      std::mt19937_64 rng(mix_seed(seed, layer++));
      cell.w_input.init_uniform(rng, lstm_bound);
      cell.w_hidden.init_uniform(rng, lstm_bound);
      cell.bias.init_uniform(rng, lstm_bound);
      lstm_.push_back(std::move(cell));
    }
    width = 2 * config_.hidden;
  }
  const std::array<std::size_t, 2> fc_out{config_.fc_width, formulation_.output_dim()};
  for (std::size_t i = 0; i < fc_out.size(); ++i) {
    nn::Dense fc("fc" + std::to_string(i), width, fc_out[i]);
    std::mt19937_64 rng(mix_seed(seed, layer++));
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    fc.weight.init_uniform(rng, bound);
    fc.bias.init_uniform(rng, bound);
    fc_.push_back(std::move(fc));
    width = fc_out[i];
  }
  if (formulation_.kind() == FormulationKind::categorical) {
    // Start every class probability at 1/K.
    const double k = static_cast<double>(formulation_.output_dim());
    std::fill(fc_.back().bias.value.begin(), fc_.back().bias.value.end(), -std::log(k - 1.0));
  }
}

void Network::check_input(const nn::Tensor& x) const {
  if (x.shape.size() != 4 || x.dim(1) != config_.input_channels || x.dim(2) != config_.frames ||
      x.dim(3) != config_.freq_bins) {
    throw std::invalid_argument("Network: expected input [B, " +
                                std::to_string(config_.input_channels) + ", " +
                                std::to_string(config_.frames) + ", " +
                                std::to_string(config_.freq_bins) + "]");
  }
}

nn::Tensor Network::run(const nn::Tensor& x, bool training, Activations* acts) const {
  check_input(x);
  nn::Tensor h = x;
  if (acts) acts->stages.resize(conv_.size());
  for (std::size_t s = 0; s < conv_.size(); ++s) {
    nn::Tensor c = conv_[s].forward(h);
    nn::Tensor r = nn::relu_forward(c);
    nn::BatchNorm2d::Cache bn_cache;
    nn::Tensor b = bn_[s].forward(r, training, &bn_cache);
    nn::PoolCache pool_cache;
    nn::Tensor p = nn::maxpool_freq_forward(b, config_.pool[s], acts ? &pool_cache : nullptr);
    if (acts) {
      auto& st = acts->stages[s];
      st.input = std::move(h);
      st.conv_out = std::move(c);
      st.relu_out = std::move(r);
      st.bn = std::move(bn_cache);
      st.pool = std::move(pool_cache);
    }
    h = std::move(p);
  }
  nn::Tensor seq = nn::to_sequence(h);
  if (acts) {
    acts->lstm_inputs.clear();
    acts->lstm_caches.assign(lstm_.size(), {});
  }
  for (std::size_t l = 0; l < config_.recurrent_layers; ++l) {
    const nn::Lstm& fwd = lstm_[2 * l];
    const nn::Lstm& bwd = lstm_[2 * l + 1];
    nn::Tensor hf = fwd.forward(seq, acts ? &acts->lstm_caches[2 * l] : nullptr);
    nn::Tensor hb = bwd.forward(seq, acts ? &acts->lstm_caches[2 * l + 1] : nullptr);
    const std::size_t B = seq.dim(0), T = seq.dim(1), H = config_.hidden;
    nn::Tensor cat({B, T, 2 * H});
    for (std::size_t r = 0; r < B * T; ++r) {
      std::copy_n(&hf.data[r * H], H, &cat.data[r * 2 * H]);
      std::copy_n(&hb.data[r * H], H, &cat.data[r * 2 * H + H]);
    }
    if (acts) acts->lstm_inputs.push_back(std::move(seq));
    seq = std::move(cat);
  }
  if (acts) acts->fc_inputs.clear();
  for (const nn::Dense& fc : fc_) {
    nn::Tensor y = fc.forward(seq);
    if (acts) acts->fc_inputs.push_back(std::move(seq));
    seq = std::move(y);
  }
  if (formulation_.kind() == FormulationKind::categorical) seq = nn::sigmoid_forward(seq);
  if (acts) acts->output = seq;
  return seq;
}

nn::Tensor Network::forward_batch(const nn::Tensor& x) const { return run(x, false, nullptr); }

FrameOutputs Network::forward(const FeatureTensor& x) const {
  const FeatureTensor* ptr = &x;
  nn::Tensor out = forward_batch(make_batch(std::span<const FeatureTensor* const>(&ptr, 1)));
  FrameOutputs fo;
  fo.frames = out.dim(1);
  fo.dim = out.dim(2);
  fo.values = std::move(out.data);
  return fo;
}

double Network::forward_backward(const nn::Tensor& x, std::span<const Target> targets,
                                 bool update_running_stats) {
  Activations acts;
  run(x, true, &acts);
  const std::size_t B = x.dim(0), T = config_.frames, K = formulation_.output_dim();
  if (targets.size() != B) throw std::invalid_argument("forward_backward: one target per sample required");

  nn::Tensor d_out({B, T, K});
  double loss = 0.0;
  std::vector<double> g;
  for (std::size_t b = 0; b < B; ++b) {
    std::span<const double> outs(&acts.output.data[b * T * K], T * K);
    loss += sample_loss(formulation_, outs, T, targets[b], &g);
    for (std::size_t i = 0; i < T * K; ++i) d_out.data[b * T * K + i] = g[i] / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);

  nn::Tensor d = formulation_.kind() == FormulationKind::categorical
                     ? nn::sigmoid_backward(acts.output, d_out)
                     : std::move(d_out);
  for (std::size_t i = fc_.size(); i-- > 0;) d = fc_[i].backward(acts.fc_inputs[i], d);

  for (std::size_t l = config_.recurrent_layers; l-- > 0;) {
    const std::size_t Bn = d.dim(0), T2 = d.dim(1), H = config_.hidden;
    nn::Tensor df({Bn, T2, H}), db({Bn, T2, H});
    for (std::size_t r = 0; r < Bn * T2; ++r) {
      std::copy_n(&d.data[r * 2 * H], H, &df.data[r * H]);
      std::copy_n(&d.data[r * 2 * H + H], H, &db.data[r * H]);
    }
    const nn::Tensor& in = acts.lstm_inputs[l];
    nn::Tensor dx_f = lstm_[2 * l].backward(in, acts.lstm_caches[2 * l], df);
    nn::Tensor dx_b = lstm_[2 * l + 1].backward(in, acts.lstm_caches[2 * l + 1], db);
    for (std::size_t i = 0; i < dx_f.size(); ++i) dx_f.data[i] += dx_b.data[i];
    d = std::move(dx_f);
  }

  const auto last = config_.stage_shapes().back();
  d = nn::from_sequence(d, last[0], last[2]);
  for (std::size_t s = conv_.size(); s-- > 0;) {
    auto& st = acts.stages[s];
    d = nn::maxpool_freq_backward(st.pool, d);
    d = bn_[s].backward(st.bn, d);
    d = nn::relu_backward(st.conv_out, d);
    d = conv_[s].backward(st.input, d, s > 0);
  }

  for (const nn::Param* p : parameters()) {
    for (double v : p->grad) {
      if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient in layer " + p->name);
    }
  }
  if (update_running_stats) {
    for (std::size_t s = 0; s < bn_.size(); ++s) bn_[s].update_running(acts.stages[s].bn, config_.bn_momentum);
  }
  return loss;
}

double Network::training_loss(const nn::Tensor& x, std::span<const Target> targets) const {
  nn::Tensor out = run(x, true, nullptr);
  const std::size_t B = x.dim(0), T = config_.frames, K = formulation_.output_dim();
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    loss += sample_loss(formulation_, std::span<const double>(&out.data[b * T * K], T * K), T, targets[b]);
  }
  return loss / static_cast<double>(B);
}

std::vector<std::uint32_t> Network::activation_pattern(const nn::Tensor& x) const {
  Activations acts;
  run(x, true, &acts);
  std::vector<std::uint32_t> pattern;
  for (const auto& st : acts.stages) {
    for (double v : st.conv_out.data) pattern.push_back(v > 0.0 ? 1u : 0u);
    pattern.insert(pattern.end(), st.pool.argmax.begin(), st.pool.argmax.end());
  }
  return pattern;
}

std::vector<nn::Param*> Network::parameters() {
  std::vector<nn::Param*> ps;
  for (std::size_t s = 0; s < conv_.size(); ++s) {
    ps.push_back(&conv_[s].weight);
    ps.push_back(&conv_[s].bias);
    ps.push_back(&bn_[s].gamma);
    ps.push_back(&bn_[s].beta);
  }
  for (auto& l : lstm_) {
    ps.push_back(&l.w_input);
    ps.push_back(&l.w_hidden);
    ps.push_back(&l.bias);
  }
  for (auto& f : fc_) {
    ps.push_back(&f.weight);
    ps.push_back(&f.bias);
  }
  return ps;
}

std::vector<const nn::Param*> Network::parameters() const {
  auto mut = const_cast<Network*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void Network::zero_grad() {
  for (nn::Param* p : parameters()) p->zero_grad();
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const nn::Param* p : parameters()) n += p->size();
  return n;
}

std::size_t Network::trunk_param_count() const {
  return param_count() - fc_.back().weight.size() - fc_.back().bias.size();
}

std::vector<std::vector<double>*> Network::buffers() {
  std::vector<std::vector<double>*> out;
  for (auto& b : bn_) {
    out.push_back(&b.running_mean);
    out.push_back(&b.running_var);
  }
  return out;
}

std::vector<const std::vector<double>*> Network::buffers() const {
  auto mut = const_cast<Network*>(this)->buffers();
  return {mut.begin(), mut.end()};
}

nn::Tensor make_batch(std::span<const FeatureTensor* const> samples) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t T = samples[0]->frames, F = samples[0]->bins;
  nn::Tensor x({samples.size(), FeatureTensor::kRows, T, F});
  const std::size_t per = FeatureTensor::kRows * T * F;
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (samples[b]->frames != T || samples[b]->bins != F) {
      throw std::invalid_argument("make_batch: inconsistent feature shapes");
    }
    std::copy(samples[b]->values.begin(), samples[b]->values.end(), x.data.begin() + b * per);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(const Network& net, const FeatureTensor& x, const Target& target,
                           double step) {
  Network work = net;
  const FeatureTensor* ptr = &x;
  const nn::Tensor batch = make_batch(std::span<const FeatureTensor* const>(&ptr, 1));
  const std::span<const Target> targets(&target, 1);
  work.zero_grad();
  const double loss = work.forward_backward(batch, targets, false);

  // Below this magnitude the comparison is effectively absolute. Scaled by
  // the loss because the difference quotient carries ~eps * |loss| / step
  // of rounding noise.
  const double floor = 1e-6 * std::max(1.0, std::abs(loss));
  const auto base_pattern = work.activation_pattern(batch);
  GradCheckReport report;
  for (nn::Param* p : work.parameters()) {
    const std::vector<double> analytic = p->grad;
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double plus = work.training_loss(batch, targets);
      const bool smooth_plus = work.activation_pattern(batch) == base_pattern;
      p->value[i] = saved - step;
      const double minus = work.training_loss(batch, targets);
      const bool smooth_minus = work.activation_pattern(batch) == base_pattern;
      p->value[i] = saved;
      if (!smooth_plus || !smooth_minus) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_param = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Decoding

Direction decode_outputs(const FrameOutputs& out, const Formulation& f) {
  if (out.frames == 0) throw std::invalid_argument("decode_outputs: no frames");
  const double n = static_cast<double>(out.frames);
  switch (f.kind()) {
    case FormulationKind::cartesian: {
      Vec3 mean = Vec3::Zero();
      for (std::size_t t = 0; t < out.frames; ++t) mean += Vec3(out.at(t, 0), out.at(t, 1), out.at(t, 2));
      mean /= n;
      if (mean.norm() < 1e-6) throw std::runtime_error("decode_outputs: ambiguous prediction (mean vector ~ 0)");
      return to_spherical(mean);
    }
    case FormulationKind::spherical: {
      double s = 0.0, c = 0.0, el = 0.0;
      for (std::size_t t = 0; t < out.frames; ++t) {
        s += std::sin(out.at(t, 0));
        c += std::cos(out.at(t, 0));
        el += out.at(t, 1);
      }
      if (std::hypot(s, c) / n < 1e-6) {
        throw std::runtime_error("decode_outputs: ambiguous prediction (azimuths cancel)");
      }
      // Unbounded elevation outputs fold back onto the sphere.
      return to_spherical(to_cartesian(std::atan2(s, c), el / n));
    }
    case FormulationKind::categorical: {
      std::size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < out.dim; ++k) {
        double score = 0.0;
        for (std::size_t t = 0; t < out.frames; ++t) score += out.at(t, k);
        if (score > best_score) {
          best_score = score;
          best = k;
        }
      }
      return f.grid().center(best);
    }
  }
  throw std::logic_error("decode_outputs: unknown formulation");
}

Direction predict_window(const Network& net, const Spectrogram& spec, std::size_t center_frame) {
  const std::size_t frames = net.config().frames;
  const std::size_t half = frames / 2;
  if (center_frame < half || center_frame - half + frames > spec.frames) {
    throw std::out_of_range("predict_window: window does not fit in the spectrogram");
  }
  if (spec.bins != net.config().freq_bins) {
    throw std::invalid_argument("predict_window: spectrogram bins do not match the network");
  }
  Spectrogram window(spec.channels, frames, spec.bins);
  window.sample_rate = spec.sample_rate;
  window.config = spec.config;
  const std::size_t start = center_frame - half;
  for (std::size_t c = 0; c < spec.channels; ++c) {
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t fb = 0; fb < spec.bins; ++fb) window.at(c, t, fb) = spec.at(c, start + t, fb);
    }
  }
  return decode_outputs(net.forward(intensity_features(window)), net.formulation());
}

}  // namespace ambidoa
