#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ambidoa/parallel.hpp"

namespace ambidoa::nn {

// Dense row-major tensor. Image tensors are [batch, channel, time, freq];
// sequence tensors are [batch, time, feature].
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
};

struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> s);
  std::size_t size() const { return value.size(); }
  void zero_grad();
  // Uniform in [-bound, bound].
  void init_uniform(std::mt19937_64& rng, double bound);
};

// 2-D convolution over (time, freq), odd square kernel, zero "same" padding.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel);

  Tensor forward(const Tensor& x, Exec exec = Exec::parallel) const;
  // Accumulates weight/bias gradients; returns dx unless `need_input_grad` is false.
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_input_grad,
                  Exec exec = Exec::parallel);

  Param weight;  // [out, in, k, k]
  Param bias;    // [out]
  std::size_t in_ch = 0, out_ch = 0, kernel = 3;
};

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// Per-channel normalization over (batch, time, freq).
class BatchNorm2d {
 public:
  struct Cache {
    std::vector<double> mean, inv_std;
    Tensor x_hat;
  };

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, std::size_t channels);

  // training=true normalizes with batch statistics and fills `cache`.
  Tensor forward(const Tensor& x, bool training, Cache* cache) const;
  Tensor backward(const Cache& cache, const Tensor& dy);
  // running = momentum * running + (1 - momentum) * batch
  void update_running(const Cache& cache, double momentum);

  Param gamma, beta;
  std::vector<double> running_mean, running_var;
  double eps = 1e-5;
  std::size_t channels = 0;
};

// Max over non-overlapping groups of `factor` frequency bins; a partial
// trailing group is dropped.
struct PoolCache {
  std::vector<std::uint32_t> argmax;  // flat input index per output element
  std::vector<std::size_t> in_shape;
};
Tensor maxpool_freq_forward(const Tensor& x, std::size_t factor, PoolCache* cache);
Tensor maxpool_freq_backward(const PoolCache& cache, const Tensor& dy);

// [B, C, T, F] -> [B, T, C*F] (feature index c*F + f), and back.
Tensor to_sequence(const Tensor& x);
Tensor from_sequence(const Tensor& seq, std::size_t channels, std::size_t freq);

// One direction of an LSTM; gates ordered input, forget, cell, output.
class Lstm {
 public:
  struct Cache {
    // Per (batch, step): gate activations [4H], cell state, hidden state.
    std::vector<double> gates, cells, hiddens;
  };

  Lstm() = default;
  Lstm(std::string name, std::size_t input, std::size_t hidden, bool reverse);

  // x [B, T, D] -> h [B, T, H]
  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(const Tensor& x, const Cache& cache, const Tensor& dh);

  Param w_input;   // [4H, D]
  Param w_hidden;  // [4H, H]
  Param bias;      // [4H]
  std::size_t input = 0, hidden = 0;
  bool reverse = false;
};

// Affine map on the last dimension of a [B, T, D] tensor.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, std::size_t in, std::size_t out);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);

  Param weight;  // [out, in]
  Param bias;    // [out]
  std::size_t in = 0, out = 0;
};

Tensor sigmoid_forward(const Tensor& x);
// dy w.r.t. the sigmoid output, y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

}  // namespace ambidoa::nn
