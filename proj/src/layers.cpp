#include "ambidoa/layers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace ambidoa::nn {

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  data.assign(n, fill);
}

Param::Param(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Param::init_uniform(std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : value) v = dist(rng);
}

namespace {

template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, std::size_t in, std::size_t out, std::size_t k)
    : weight(name + ".weight", {out, in, k, k}), bias(name + ".bias", {out}), in_ch(in),
      out_ch(out), kernel(k) {
  if (k % 2 == 0) throw std::invalid_argument("Conv2d: kernel size must be odd");
}

Tensor Conv2d::forward(const Tensor& x, Exec exec) const {
  if (x.shape.size() != 4 || x.dim(1) != in_ch) throw std::invalid_argument("Conv2d: input shape mismatch");
  const std::size_t B = x.dim(0), T = x.dim(2), F = x.dim(3);
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  Tensor y({B, out_ch, T, F});
  for_each_index(B * out_ch, exec, [&](std::size_t job) {
    const std::size_t b = job / out_ch, co = job % out_ch;
    double* out = &y.data[(b * out_ch + co) * T * F];
    std::fill(out, out + T * F, bias.value[co]);
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
      const double* in = &x.data[(b * in_ch + ci) * T * F];
      for (std::size_t kt = 0; kt < kernel; ++kt) {
        for (std::size_t kf = 0; kf < kernel; ++kf) {
          const double w = weight.value[((co * in_ch + ci) * kernel + kt) * kernel + kf];
          const std::ptrdiff_t dt = static_cast<std::ptrdiff_t>(kt) - pad;
          const std::ptrdiff_t df = static_cast<std::ptrdiff_t>(kf) - pad;
          const std::size_t t0 = dt < 0 ? static_cast<std::size_t>(-dt) : 0;
          const std::size_t t1 = dt > 0 ? T - static_cast<std::size_t>(dt) : T;
          const std::size_t f0 = df < 0 ? static_cast<std::size_t>(-df) : 0;
          const std::size_t f1 = df > 0 ? F - static_cast<std::size_t>(df) : F;
          for (std::size_t t = t0; t < t1; ++t) {
            const double* src = in + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(t) + dt) * F + df;
            double* dst = out + t * F;
            for (std::size_t f = f0; f < f1; ++f) dst[f] += w * src[f];
          }
        }
      }
    }
  });
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, bool need_input_grad, Exec exec) {
  const std::size_t B = x.dim(0), T = x.dim(2), F = x.dim(3);
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);

  // Weight and bias gradients: one output channel per job, fixed summation order.
  for_each_index(out_ch, exec, [&](std::size_t co) {
    double db = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double* g = &dy.data[(b * out_ch + co) * T * F];
      for (std::size_t i = 0; i < T * F; ++i) db += g[i];
    }
    bias.grad[co] += db;
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
      for (std::size_t kt = 0; kt < kernel; ++kt) {
        for (std::size_t kf = 0; kf < kernel; ++kf) {
          const std::ptrdiff_t dt = static_cast<std::ptrdiff_t>(kt) - pad;
          const std::ptrdiff_t df = static_cast<std::ptrdiff_t>(kf) - pad;
          const std::size_t t0 = dt < 0 ? static_cast<std::size_t>(-dt) : 0;
          const std::size_t t1 = dt > 0 ? T - static_cast<std::size_t>(dt) : T;
          const std::size_t f0 = df < 0 ? static_cast<std::size_t>(-df) : 0;
          const std::size_t f1 = df > 0 ? F - static_cast<std::size_t>(df) : F;
          double acc = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const double* g = &dy.data[(b * out_ch + co) * T * F];
            const double* in = &x.data[(b * in_ch + ci) * T * F];
            for (std::size_t t = t0; t < t1; ++t) {
              const double* src = in + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(t) + dt) * F + df;
              const double* gr = g + t * F;
              for (std::size_t f = f0; f < f1; ++f) acc += gr[f] * src[f];
            }
          }
          weight.grad[((co * in_ch + ci) * kernel + kt) * kernel + kf] += acc;
        }
      }
    }
  });

  if (!need_input_grad) return {};
  Tensor dx({B, in_ch, T, F});
  for_each_index(B * in_ch, exec, [&](std::size_t job) {
    const std::size_t b = job / in_ch, ci = job % in_ch;
    double* out = &dx.data[(b * in_ch + ci) * T * F];
    for (std::size_t co = 0; co < out_ch; ++co) {
      const double* g = &dy.data[(b * out_ch + co) * T * F];
      for (std::size_t kt = 0; kt < kernel; ++kt) {
        for (std::size_t kf = 0; kf < kernel; ++kf) {
          const double w = weight.value[((co * in_ch + ci) * kernel + kt) * kernel + kf];
          const std::ptrdiff_t dt = static_cast<std::ptrdiff_t>(kt) - pad;
          const std::ptrdiff_t df = static_cast<std::ptrdiff_t>(kf) - pad;
          const std::size_t t0 = dt < 0 ? static_cast<std::size_t>(-dt) : 0;
          const std::size_t t1 = dt > 0 ? T - static_cast<std::size_t>(dt) : T;
          const std::size_t f0 = df < 0 ? static_cast<std::size_t>(-df) : 0;
          const std::size_t f1 = df > 0 ? F - static_cast<std::size_t>(df) : F;
          for (std::size_t t = t0; t < t1; ++t) {
            double* dst = out + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(t) + dt) * F + df;
            const double* gr = g + t * F;
            for (std::size_t f = f0; f < f1; ++f) dst[f] += w * gr[f];
          }
        }
      }
    }
  });
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU / sigmoid

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x.data[i] > 0.0)) dx.data[i] = 0.0;
  }
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = sigmoid(v);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (1.0 - y.data[i]);
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, std::size_t ch)
    : gamma(name + ".gamma", {ch}), beta(name + ".beta", {ch}), running_mean(ch, 0.0),
      running_var(ch, 1.0), channels(ch) {
  std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training, Cache* cache) const {
  const std::size_t B = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  if (C != channels) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  std::vector<double> mean(C), inv_std(C);
  if (training) {
    const double n = static_cast<double>(B * S);
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = &x.data[(b * C + c) * S];
        for (std::size_t i = 0; i < S; ++i) m += p[i];
      }
      m /= n;
      double v = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = &x.data[(b * C + c) * S];
        for (std::size_t i = 0; i < S; ++i) v += (p[i] - m) * (p[i] - m);
      }
      v /= n;
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(v + eps);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(running_var[c] + eps);
    }
  }
  Tensor y(x.shape);
  Tensor x_hat(training ? x.shape : std::vector<std::size_t>{});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (b * C + c) * S;
      for (std::size_t i = 0; i < S; ++i) {
        const double xh = (x.data[off + i] - mean[c]) * inv_std[c];
        if (training) x_hat.data[off + i] = xh;
        y.data[off + i] = gamma.value[c] * xh + beta.value[c];
      }
    }
  }
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->x_hat = std::move(x_hat);
  }
  return y;
}

Tensor BatchNorm2d::backward(const Cache& cache, const Tensor& dy) {
  const std::size_t B = dy.dim(0), C = dy.dim(1), S = dy.dim(2) * dy.dim(3);
  const double n = static_cast<double>(B * S);
  Tensor dx(dy.shape);
  for (std::size_t c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = (b * C + c) * S;
      for (std::size_t i = 0; i < S; ++i) {
        sum_dy += dy.data[off + i];
        sum_dy_xh += dy.data[off + i] * cache.x_hat.data[off + i];
      }
    }
    gamma.grad[c] += sum_dy_xh;
    beta.grad[c] += sum_dy;
    const double k = gamma.value[c] * cache.inv_std[c] / n;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = (b * C + c) * S;
      for (std::size_t i = 0; i < S; ++i) {
        dx.data[off + i] =
            k * (n * dy.data[off + i] - sum_dy - cache.x_hat.data[off + i] * sum_dy_xh);
      }
    }
  }
  return dx;
}

void BatchNorm2d::update_running(const Cache& cache, double momentum) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double var = 1.0 / (cache.inv_std[c] * cache.inv_std[c]) - eps;
    running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * cache.mean[c];
    running_var[c] = momentum * running_var[c] + (1.0 - momentum) * var;
  }
}

// ---------------------------------------------------------------------------
// Max pooling over frequency

Tensor maxpool_freq_forward(const Tensor& x, std::size_t factor, PoolCache* cache) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  const std::size_t Fo = F / factor;
  if (Fo == 0) throw std::invalid_argument("maxpool: pool factor exceeds frequency size");
  Tensor y({B, C, T, Fo});
  if (cache) {
    cache->argmax.assign(y.size(), 0);
    cache->in_shape = x.shape;
  }
  for (std::size_t row = 0; row < B * C * T; ++row) {
    for (std::size_t j = 0; j < Fo; ++j) {
      const std::size_t base = row * F + j * factor;
      std::size_t best = base;
      for (std::size_t i = 1; i < factor; ++i) {
        if (x.data[base + i] > x.data[best]) best = base + i;
      }
      y.data[row * Fo + j] = x.data[best];
      if (cache) cache->argmax[row * Fo + j] = static_cast<std::uint32_t>(best);
    }
  }
  return y;
}

Tensor maxpool_freq_backward(const PoolCache& cache, const Tensor& dy) {
  Tensor dx(cache.in_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[cache.argmax[i]] += dy.data[i];
  return dx;
}

Tensor to_sequence(const Tensor& x) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  Tensor seq({B, T, C * F});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          seq.data[(b * T + t) * C * F + c * F + f] = x.data[((b * C + c) * T + t) * F + f];
  return seq;
}

Tensor from_sequence(const Tensor& seq, std::size_t C, std::size_t F) {
  const std::size_t B = seq.dim(0), T = seq.dim(1);
  Tensor x({B, C, T, F});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          x.data[((b * C + c) * T + t) * F + f] = seq.data[(b * T + t) * C * F + c * F + f];
  return x;
}

// ---------------------------------------------------------------------------
// LSTM

Lstm::Lstm(std::string name, std::size_t in, std::size_t h, bool rev)
    : w_input(name + ".w_input", {4 * h, in}), w_hidden(name + ".w_hidden", {4 * h, h}),
      bias(name + ".bias", {4 * h}), input(in), hidden(h), reverse(rev) {}

Tensor Lstm::forward(const Tensor& x, Cache* cache) const {
  const std::size_t B = x.dim(0), T = x.dim(1), D = x.dim(2), H = hidden;
  if (D != input) throw std::invalid_argument("Lstm: input width mismatch");
  Tensor h_out({B, T, H});
  Cache local;
  Cache& c = cache ? *cache : local;
  c.gates.assign(B * T * 4 * H, 0.0);
  c.cells.assign(B * T * H, 0.0);
  c.hiddens.assign(B * T * H, 0.0);
  std::vector<double> z(4 * H);
  for (std::size_t b = 0; b < B; ++b) {
    const double* h_prev = nullptr;
    const double* c_prev = nullptr;
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      const double* xt = &x.data[(b * T + t) * D];
      for (std::size_t g = 0; g < 4 * H; ++g) {
        double acc = bias.value[g];
        const double* wi = &w_input.value[g * D];
        for (std::size_t d = 0; d < D; ++d) acc += wi[d] * xt[d];
        if (h_prev) {
          const double* wh = &w_hidden.value[g * H];
          for (std::size_t k = 0; k < H; ++k) acc += wh[k] * h_prev[k];
        }
        z[g] = acc;
      }
      double* gates = &c.gates[(b * T + t) * 4 * H];
      double* cell = &c.cells[(b * T + t) * H];
      double* hid = &c.hiddens[(b * T + t) * H];
      for (std::size_t k = 0; k < H; ++k) {
        const double i = sigmoid(z[k]);
        const double f = sigmoid(z[H + k]);
        const double g = std::tanh(z[2 * H + k]);
        const double o = sigmoid(z[3 * H + k]);
        gates[k] = i;
        gates[H + k] = f;
        gates[2 * H + k] = g;
        gates[3 * H + k] = o;
        cell[k] = i * g + (c_prev ? f * c_prev[k] : 0.0);
        hid[k] = o * std::tanh(cell[k]);
      }
      std::copy(hid, hid + H, &h_out.data[(b * T + t) * H]);
      h_prev = hid;
      c_prev = cell;
    }
  }
  return h_out;
}

Tensor Lstm::backward(const Tensor& x, const Cache& cache, const Tensor& dh) {
  const std::size_t B = x.dim(0), T = x.dim(1), D = x.dim(2), H = hidden;
  Tensor dx({B, T, D});
  std::vector<double> dh_next(H), dc_next(H), dz(4 * H);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    for (std::size_t step = T; step-- > 0;) {
      const std::size_t t = reverse ? T - 1 - step : step;
      const bool has_prev = step > 0;
      const std::size_t t_prev = reverse ? t + 1 : t - 1;
      const double* gates = &cache.gates[(b * T + t) * 4 * H];
      const double* cell = &cache.cells[(b * T + t) * H];
      const double* c_prev = has_prev ? &cache.cells[(b * T + t_prev) * H] : nullptr;
      const double* h_prev = has_prev ? &cache.hiddens[(b * T + t_prev) * H] : nullptr;
      for (std::size_t k = 0; k < H; ++k) {
        const double i = gates[k], f = gates[H + k], g = gates[2 * H + k], o = gates[3 * H + k];
        const double tc = std::tanh(cell[k]);
        const double dht = dh.data[(b * T + t) * H + k] + dh_next[k];
        const double dc = dht * o * (1.0 - tc * tc) + dc_next[k];
        dz[k] = dc * g * i * (1.0 - i);
        dz[H + k] = has_prev ? dc * c_prev[k] * f * (1.0 - f) : 0.0;
        dz[2 * H + k] = dc * i * (1.0 - g * g);
        dz[3 * H + k] = dht * tc * o * (1.0 - o);
        dc_next[k] = dc * f;
      }
      const double* xt = &x.data[(b * T + t) * D];
      double* dxt = &dx.data[(b * T + t) * D];
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      for (std::size_t gidx = 0; gidx < 4 * H; ++gidx) {
        const double d = dz[gidx];
        if (d == 0.0) continue;
        bias.grad[gidx] += d;
        double* gwi = &w_input.grad[gidx * D];
        const double* wi = &w_input.value[gidx * D];
        for (std::size_t j = 0; j < D; ++j) {
          gwi[j] += d * xt[j];
          dxt[j] += d * wi[j];
        }
        if (has_prev) {
          double* gwh = &w_hidden.grad[gidx * H];
          const double* wh = &w_hidden.value[gidx * H];
          for (std::size_t k = 0; k < H; ++k) {
            gwh[k] += d * h_prev[k];
            dh_next[k] += d * wh[k];
          }
        }
      }
      if (!has_prev) std::fill(dc_next.begin(), dc_next.end(), 0.0);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, std::size_t i, std::size_t o)
    : weight(name + ".weight", {o, i}), bias(name + ".bias", {o}), in(i), out(o) {}

Tensor Dense::forward(const Tensor& x) const {
  const std::size_t rows = x.size() / in;
  if (x.shape.back() != in) throw std::invalid_argument("Dense: input width mismatch");
  std::vector<std::size_t> shape = x.shape;
  shape.back() = out;
  Tensor y(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x.data[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias.value[o];
      const double* w = &weight.value[o * in];
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * xr[i];
      y.data[r * out + o] = acc;
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& x, const Tensor& dy) {
  const std::size_t rows = x.size() / in;
  Tensor dx(x.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x.data[r * in];
    double* dxr = &dx.data[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy.data[r * out + o];
      if (g == 0.0) continue;
      bias.grad[o] += g;
      double* gw = &weight.grad[o * in];
      const double* w = &weight.value[o * in];
      for (std::size_t i = 0; i < in; ++i) {
        gw[i] += g * xr[i];
        dxr[i] += g * w[i];
      }
    }
  }
  return dx;
}

}  // namespace ambidoa::nn
