// Parallel kernels against their serial references. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "tislf/kernels.hpp"
#include "tislf/procedural.hpp"
#include "tislf/recognition.hpp"

using namespace tislf;

namespace {

FloatImage test_image(int w, int h) {
  FloatImage img = synth::value_noise(w, h, 17, synth::NoiseParams{});
  synth::normalize_range(img, 0.0f, 1.0f);
  return img;
}

std::vector<float> random_descriptors(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> out(n * 128);
  for (float& v : out) v = u(rng);
  return out;
}

void BM_Blur(benchmark::State& state) {
  const FloatImage img = test_image(640, 480);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gaussian_blur(img, 1.6));
}

void BM_BlurSerial(benchmark::State& state) {
  const FloatImage img = test_image(640, 480);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gaussian_blur_serial(img, 1.6));
}

void BM_Subtract(benchmark::State& state) {
  const FloatImage a = test_image(640, 480);
  const FloatImage b = kernels::gaussian_blur(a, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::subtract(a, b));
}

void BM_SubtractSerial(benchmark::State& state) {
  const FloatImage a = test_image(640, 480);
  const FloatImage b = kernels::gaussian_blur(a, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::subtract_serial(a, b));
}

void BM_Gradient(benchmark::State& state) {
  const FloatImage img = test_image(640, 480);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gradient_field(img));
}

void BM_GradientSerial(benchmark::State& state) {
  const FloatImage img = test_image(640, 480);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gradient_field_serial(img));
}

void BM_TwoNearest(benchmark::State& state) {
  const auto q = random_descriptors(static_cast<std::size_t>(state.range(0)), 1);
  const auto t = random_descriptors(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::two_nearest(q, t, 128));
}

void BM_TwoNearestSerial(benchmark::State& state) {
  const auto q = random_descriptors(static_cast<std::size_t>(state.range(0)), 1);
  const auto t = random_descriptors(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::two_nearest_serial(q, t, 128));
}

struct MatrixInputs {
  std::vector<FeatureSet> frames;
  std::vector<TargetImage> targets;
};

const MatrixInputs& matrix_inputs() {
  static const MatrixInputs in = [] {
    MatrixInputs m;
    for (std::uint64_t k = 0; k < 4; ++k) {
      m.targets.push_back(make_target("t" + std::to_string(k), "g" + std::to_string(k),
                                      synth::make_target_image(160, 120, 40 + k), FeatureParams{}));
    }
    for (std::uint64_t i = 0; i < 8; ++i) m.frames.push_back(detect_and_describe(synth::make_target_image(320, 240, 90 + i)));
    return m;
  }();
  return in;
}

void BM_MatchingMatrix(benchmark::State& state) {
  const auto& in = matrix_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(build_matching_matrix(in.frames, in.targets));
}

void BM_MatchingMatrixSerial(benchmark::State& state) {
  const auto& in = matrix_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(build_matching_matrix_serial(in.frames, in.targets));
}

}  // namespace

BENCHMARK(BM_Blur)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlurSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Subtract)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SubtractSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Gradient)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TwoNearest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TwoNearestSerial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchingMatrix)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchingMatrixSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
