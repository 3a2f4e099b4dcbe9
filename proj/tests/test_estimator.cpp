#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ambidoa/estimator.hpp"

using namespace ambidoa;
namespace fs = std::filesystem;

namespace {

FeatureTensor random_features(std::size_t frames, std::size_t bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  FeatureTensor f(frames, bins);
  for (double& v : f.values) v = u(rng);
  return f;
}

nn::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  nn::Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  for (double& v : t.data) v = n(rng);
  return t;
}

// Plane-wave-like features: active rows carry (sqrt3/2) u plus noise.
std::vector<LabeledSample> toy_set(std::size_t n, const NetworkConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 0.05);
  std::vector<LabeledSample> out;
  for (const auto& d : random_directions(n, seed)) {
    LabeledSample s;
    s.label = d;
    s.features = FeatureTensor(cfg.frames, cfg.freq_bins);
    const Vec3 u = d.unit();
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t t = 0; t < cfg.frames; ++t) {
        for (std::size_t f = 0; f < cfg.freq_bins; ++f) {
          s.features.at(r, t, f) = std::sqrt(3.0) / 2 * u[static_cast<int>(r)] + noise(rng);
          s.features.at(r + 3, t, f) = noise(rng);
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("conv2d serial and parallel agree bitwise") {
  nn::Conv2d conv("c", 3, 5, 3);
  std::mt19937_64 rng(1);
  conv.weight.init_uniform(rng, 0.3);
  conv.bias.init_uniform(rng, 0.3);
  const nn::Tensor x = random_tensor({2, 3, 6, 11}, 2);
  const nn::Tensor ya = conv.forward(x, Exec::serial);
  const nn::Tensor yb = conv.forward(x, Exec::parallel);
  CHECK(ya.data == yb.data);
  const nn::Tensor dy = random_tensor(ya.shape, 3);
  nn::Conv2d a = conv, b = conv;
  a.weight.zero_grad();
  a.bias.zero_grad();
  b.weight.zero_grad();
  b.bias.zero_grad();
  const nn::Tensor dxa = a.backward(x, dy, true, Exec::serial);
  const nn::Tensor dxb = b.backward(x, dy, true, Exec::parallel);
  CHECK(dxa.data == dxb.data);
  CHECK(a.weight.grad == b.weight.grad);
  CHECK(a.bias.grad == b.bias.grad);
}

TEST_CASE("conv2d matches a direct loop") {
  nn::Conv2d conv("c", 2, 1, 3);
  std::mt19937_64 rng(4);
  conv.weight.init_uniform(rng, 1.0);
  conv.bias.value[0] = 0.25;
  const nn::Tensor x = random_tensor({1, 2, 4, 5}, 5);
  const nn::Tensor y = conv.forward(x);
  for (int t = 0; t < 4; ++t) {
    for (int f = 0; f < 5; ++f) {
      double acc = 0.25;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            const int tt = t + i - 1, ff = f + j - 1;
            if (tt < 0 || tt >= 4 || ff < 0 || ff >= 5) continue;
            acc += conv.weight.value[(c * 3 + i) * 3 + j] * x.data[(c * 4 + tt) * 5 + ff];
          }
        }
      }
      CHECK(y.data[t * 5 + f] == doctest::Approx(acc));
    }
  }
}

TEST_CASE("frequency max pool drops the partial group") {
  nn::Tensor x({1, 1, 1, 7});
  x.data = {1, 5, 2, 3, 9, 4, 100};
  nn::PoolCache cache;
  const nn::Tensor y = nn::maxpool_freq_forward(x, 3, &cache);
  REQUIRE(y.dim(3) == 2);
  CHECK(y.data[0] == 5);
  CHECK(y.data[1] == 9);
  nn::Tensor dy(y.shape, 1.0);
  const nn::Tensor dx = nn::maxpool_freq_backward(cache, dy);
  CHECK(dx.data == std::vector<double>{0, 1, 0, 0, 1, 0, 0});
}

TEST_CASE("sequence reshape round trip") {
  const nn::Tensor x = random_tensor({2, 3, 4, 5}, 6);
  const nn::Tensor s = nn::to_sequence(x);
  CHECK(s.shape == std::vector<std::size_t>{2, 4, 15});
  CHECK(nn::from_sequence(s, 3, 5).data == x.data);
}

TEST_CASE("preset shapes") {
  const NetworkConfig p = NetworkConfig::paper();
  const auto shapes = p.stage_shapes();
  REQUIRE(shapes.size() == 3);
  CHECK(shapes[0] == std::array<std::size_t, 3>{64, 25, 64});
  CHECK(shapes[1] == std::array<std::size_t, 3>{64, 25, 8});
  CHECK(shapes[2] == std::array<std::size_t, 3>{64, 25, 2});
  CHECK(p.stft().window == 1024);
  CHECK(NetworkConfig::desk().stft().window == 256);
  CHECK_THROWS(NetworkConfig::preset("huge"));
}

TEST_CASE("output shapes per formulation") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  const FeatureTensor x = random_features(cfg.frames, cfg.freq_bins, 1);
  CHECK(Network(cfg, Formulation::cartesian(), 1).forward(x).dim == 3);
  CHECK(Network(cfg, Formulation::spherical(), 1).forward(x).dim == 2);
  const Formulation cat = Formulation::categorical(10);
  const FrameOutputs o = Network(cfg, cat, 1).forward(x);
  CHECK(o.dim == cat.grid().size());
  CHECK(o.frames == cfg.frames);
  CHECK_THROWS_AS(Network(cfg, cat, 1).forward(random_features(cfg.frames + 1, cfg.freq_bins, 2)),
                  std::invalid_argument);
}

TEST_CASE("zeroed output layer gives 0.5 categorical scores") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  Network net(cfg, Formulation::categorical(30), 2);
  auto& out = net.output_layer();
  std::fill(out.weight.value.begin(), out.weight.value.end(), 0.0);
  std::fill(out.bias.value.begin(), out.bias.value.end(), 0.0);
  const FrameOutputs o = net.forward(FeatureTensor(cfg.frames, cfg.freq_bins));
  for (double v : o.values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("categorical loss values") {
  const std::size_t K = 429;
  std::vector<double> p(2 * K, 0.5);
  CHECK(loss_categorical(p, 2, K, 5) == doctest::Approx(K * std::log(2.0)));
  std::vector<double> onehot(2 * K, 0.0);
  onehot[5] = onehot[K + 5] = 1.0;
  CHECK(loss_categorical(onehot, 2, K, 5) < 1e-4);
  // Permutation equivariance: swap classes 5 and 9 in both outputs and label.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> q(K);
  for (double& v : q) v = u(rng);
  std::vector<double> qs = q;
  std::swap(qs[5], qs[9]);
  CHECK(loss_categorical(q, 1, K, 5) == doctest::Approx(loss_categorical(qs, 1, K, 9)));
}

TEST_CASE("cartesian loss values") {
  const Vec3 label(1, 0, 0);
  std::vector<double> same{1, 0, 0, 1, 0, 0};
  std::vector<double> grad;
  CHECK(loss_cartesian(same, 2, label, &grad) == 0.0);
  for (double g : grad) CHECK(g == 0.0);
  std::vector<double> neg{-1, 0, 0};
  CHECK(loss_cartesian(neg, 1, label) == doctest::Approx(4.0 / 3.0));
  std::vector<double> twice{2, 0, 0};
  CHECK(loss_cartesian(twice, 1, label) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("haversine loss values") {
  const Direction label{0.3, 0.2};
  std::vector<double> same{0.3, 0.2};
  std::vector<double> grad;
  CHECK(loss_haversine(same, 1, label, &grad) <= 2 * std::sqrt(kHaversineClamp) + 1e-12);
  for (double g : grad) CHECK(std::isfinite(g));
  std::vector<double> anti{kPi, 0.0};
  CHECK(loss_haversine(anti, 1, Direction{0, 0}) == doctest::Approx(kPi).epsilon(1e-5));
  const auto a = random_directions(200, 3), b = random_directions(200, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<double> o{a[i].azimuth, a[i].elevation};
    const double ref = std::acos(std::clamp(a[i].unit().dot(b[i].unit()), -1.0, 1.0));
    CHECK(std::abs(loss_haversine(o, 1, b[i]) - ref) < 1e-5);
  }
}

TEST_CASE("gradient checks on the tiny preset") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  const FeatureTensor x = random_features(cfg.frames, cfg.freq_bins, 11);
  const Direction label{0.7, -0.3};
  for (const auto& f : {Formulation::categorical(10), Formulation::cartesian(), Formulation::spherical()}) {
    const Network net(cfg, f, 708);
    const GradCheckReport r = grad_check(net, x, Target::from_direction(label, f));
    MESSAGE(f.name() << " worst " << r.worst_param << " rel " << r.max_relative_error << " skipped " << r.skipped);
    CHECK(r.checked + r.skipped == net.param_count());
    CHECK(r.skipped * 20 < net.param_count());
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("decode examples") {
  FrameOutputs o{2, 3, {1, 0, 0, 0, 1, 0}};
  const Vec3 d = to_cartesian(decode_outputs(o, Formulation::cartesian()));
  CHECK(d.x() == doctest::Approx(std::sqrt(0.5)));
  CHECK(d.y() == doctest::Approx(std::sqrt(0.5)));
  FrameOutputs zero{1, 3, {0, 0, 0}};
  CHECK_THROWS_AS(decode_outputs(zero, Formulation::cartesian()), std::runtime_error);

  const Formulation cat = Formulation::categorical(30);
  const std::size_t K = cat.output_dim();
  FrameOutputs c{2, K, std::vector<double>(2 * K, 0.0)};
  c.values[3] = 0.9;
  c.values[7] = 0.8;
  c.values[K + 7] = 0.9;
  c.values[K + 3] = 0.1;
  CHECK(decode_outputs(c, cat) == cat.grid().center(7));

  FrameOutputs s{3, 2, {0.4, 0.1, 0.4, 0.1, 0.4, 0.1}};
  const Direction ds = decode_outputs(s, Formulation::spherical());
  CHECK(ds.azimuth == doctest::Approx(0.4));
  CHECK(ds.elevation == doctest::Approx(0.1));
}

TEST_CASE("parameter counts") {
  nn::Dense d("d", 128, 3);
  CHECK(d.weight.size() + d.bias.size() == 387);
  nn::Dense c("c", 128, 429);
  CHECK(c.weight.size() + c.bias.size() == 55341);
  const NetworkConfig p = NetworkConfig::paper();
  const Network cart(p, Formulation::cartesian(), 1);
  const Network cat(p, Formulation::categorical(10), 1);
  CHECK(cart.param_count() < cat.param_count());
  CHECK(cart.trunk_param_count() == cat.trunk_param_count());
  CHECK(cat.param_count() - cat.trunk_param_count() == 128 * cat.formulation().output_dim() +
                                                          cat.formulation().output_dim());
}

TEST_CASE("same seed gives identical weights") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  const Network a(cfg, Formulation::cartesian(), 3), b(cfg, Formulation::cartesian(), 3);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("training: lr 0 keeps parameters, seed fixes history, loss decreases") {
  NetworkConfig cfg = NetworkConfig::tiny();
  const auto data = toy_set(64, cfg, 9);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.learning_rate = 0.0;
  const Network init(cfg, Formulation::cartesian(), tc.seed);
  const TrainResult frozen = train(data, {}, Formulation::cartesian(), cfg, tc);
  const auto p0 = init.parameters(), p1 = frozen.network.parameters();
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p0[i]->value == p1[i]->value);

  tc.learning_rate = 3e-3;
  tc.epochs = 15;
  const TrainResult a = train(data, data, Formulation::cartesian(), cfg, tc);
  const TrainResult b = train(data, data, Formulation::cartesian(), cfg, tc);
  REQUIRE(a.history.epochs.size() == 15);
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
  }
  CHECK(a.history.epochs.back().train_loss < a.history.initial_train_loss);
}

TEST_CASE("training rejects bad shapes and configs") {
  NetworkConfig cfg = NetworkConfig::tiny();
  std::vector<LabeledSample> bad(1);
  bad[0].features = FeatureTensor(cfg.frames, cfg.freq_bins + 1);
  CHECK_THROWS_AS(train(bad, {}, Formulation::cartesian(), cfg, {}), std::invalid_argument);
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  const auto data = toy_set(16, cfg, 4);
  TrainConfig tc;
  tc.epochs = 1;
  const TrainResult r = train(data, {}, Formulation::categorical(30), cfg, tc);
  const fs::path p = fs::temp_directory_path() / "ambidoa_test_model.adom";
  save_checkpoint(p, r.network);
  const Network back = load_checkpoint(p);
  CHECK(back.formulation().name() == "categorical");
  CHECK(back.param_count() == r.network.param_count());
  CHECK(back.forward(data[0].features).values == r.network.forward(data[0].features).values);
  std::ofstream(p, std::ios::binary) << "NOPE";
  CHECK_THROWS(load_checkpoint(p));
  fs::remove(p);
}
