#include <random>

#include <benchmark/benchmark.h>

#include "ambidoa/acoustics.hpp"
#include "ambidoa/dsp.hpp"
#include "ambidoa/layers.hpp"
#include "ambidoa/music.hpp"
#include "ambidoa/parallel.hpp"

using namespace ambidoa;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, 1);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

FoaSignal random_foa(std::size_t n, std::uint64_t seed) {
  FoaSignal s(n, kDefaultSampleRate);
  for (int c = 0; c < 4; ++c) s.channels[c] = gaussian(n, seed + c);
  return s;
}

void BM_TracePaths(benchmark::State& st) {
  Scene s;
  s.room = RoomConfig::uniform(Vec3(4, 5, 3), 0.3, 0.5);
  s.source = Vec3(1, 1, 1);
  s.listener = Vec3(3, 4, 2);
  TraceParams tp;
  tp.n_rays = 5000;
  for (auto _ : st) benchmark::DoNotOptimize(trace_paths(s, tp, exec_of(st)));
}

void BM_Conv2dForward(benchmark::State& st) {
  nn::Conv2d conv("c", 8, 8, 3);
  std::mt19937_64 rng(1);
  conv.weight.init_uniform(rng, 0.1);
  nn::Tensor x({16, 8, 25, 129});
  x.data = gaussian(x.size(), 2);
  for (auto _ : st) benchmark::DoNotOptimize(conv.forward(x, exec_of(st)));
}

void BM_Conv2dBackward(benchmark::State& st) {
  nn::Conv2d conv("c", 8, 8, 3);
  std::mt19937_64 rng(1);
  conv.weight.init_uniform(rng, 0.1);
  nn::Tensor x({16, 8, 25, 129});
  x.data = gaussian(x.size(), 3);
  nn::Tensor dy(x.shape);
  dy.data = gaussian(dy.size(), 4);
  for (auto _ : st) benchmark::DoNotOptimize(conv.backward(x, dy, true, exec_of(st)));
}

void BM_MusicSpectrum(benchmark::State& st) {
  const Spectrogram spec = stft(random_foa(1024 + 24 * 512, 5), 25);
  const auto cov = spatial_covariance(spec, bin_range_hz(spec, 300, 4000));
  const SphereGrid grid = build_grid(10);
  for (auto _ : st) benchmark::DoNotOptimize(music_spectrum(cov, grid, 1, exec_of(st)));
}

void BM_IntensityFeatures(benchmark::State& st) {
  const Spectrogram spec = stft(random_foa(1024 + 24 * 512, 6), 25);
  for (auto _ : st) benchmark::DoNotOptimize(intensity_features(spec, exec_of(st)));
}

void BM_ConvolveFft(benchmark::State& st) {
  const auto dry = gaussian(16000, 7);
  const FoaIR ir = random_foa(4000, 8);
  for (auto _ : st) benchmark::DoNotOptimize(convolve_foa(dry, kDefaultSampleRate, ir, exec_of(st)));
}

void BM_ConvolveDirect(benchmark::State& st) {
  const auto dry = gaussian(16000, 7);
  const auto ir = gaussian(4000, 8);
  for (auto _ : st) benchmark::DoNotOptimize(convolve_direct(dry, ir));
}

}  // namespace

// Arg 0 = serial reference, 1 = OpenMP path.
BENCHMARK(BM_TracePaths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MusicSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntensityFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvolveFft)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveDirect)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
