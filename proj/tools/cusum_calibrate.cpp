// cusum_calibrate: empirical false-alarm and single-cut detection rates of the
// scene-change detector over a sweep of alpha.
//
// In-scene similarity values are pooled from rendered videos without cuts, then
// resampled into long sequences. ARL0 is the mean number of samples between false
// drop alarms on those sequences; the detection rate is the share of injected
// one-sample dips that alarm within two samples.
#include <CLI11.hpp>

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tislf/features.hpp"
#include "tislf/segmentation.hpp"
#include "tislf/synthbench.hpp"

namespace {

using namespace tislf;

std::vector<double> pooled_in_scene(int videos, std::uint64_t seed, int frames) {
  const auto lib = synth::make_target_library(5, seed);
  synth::CorpusParams params;
  params.n_frames = frames;
  params.min_cuts = 0;
  params.max_cuts = 0;
  std::vector<double> pool;
  for (int v = 0; v < videos; ++v) {
    const auto script = synth::make_corpus_script(synth::derive_seed(seed, static_cast<std::uint64_t>(v)), lib, params);
    const auto images = synth::render_frames(script, lib);
    std::vector<FeatureSet> fs(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) fs[i] = detect_and_describe(images[i]);
    const auto w = build_similarity_vector(fs);
    pool.insert(pool.end(), w.values.begin(), w.values.end());
  }
  return pool;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sweep cusum.alpha on synthetic no-change sequences"};
  int videos = 4;
  int frames = 120;
  std::uint64_t seed = 11;
  std::size_t length = 200000;
  double cut_w = 0.01;
  std::vector<double> alphas{0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 1.5};
  app.add_option("--videos", videos, "rendered no-cut videos to pool")->check(CLI::PositiveNumber);
  app.add_option("--frames", frames, "frames per video")->check(CLI::Range(10, 100000));
  app.add_option("--seed", seed, "seed");
  app.add_option("--length", length, "resampled sequence length")->check(CLI::Range(1000, 100000000));
  app.add_option("--cut-w", cut_w, "similarity of an injected cut sample");
  app.add_option("--alpha", alphas, "alpha values to sweep");
  CLI11_PARSE(app, argc, argv);

  const auto pool = pooled_in_scene(videos, seed, frames);
  std::printf("pooled %zu in-scene samples from %d videos\n", pool.size(), videos);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  SimilarityVector quiet;
  for (std::size_t i = 0; i < length; ++i) quiet.values.push_back(pool[pick(rng)]);
  quiet.degenerate_mask.assign(length, false);

  constexpr int kSpacing = 60;
  SimilarityVector dipped = quiet;
  std::vector<int> dips;
  for (std::size_t i = kSpacing; i < length; i += kSpacing) {
    dipped.values[i] = cut_w;
    dips.push_back(static_cast<int>(i));
  }

  std::printf("%8s %14s %14s\n", "alpha", "ARL0", "cut detected");
  for (double alpha : alphas) {
    CusumParams params;
    params.alpha = alpha;
    std::size_t false_alarms = 0;
    for (const auto& e : detect_changes(quiet, params).events) false_alarms += e.kind == AlarmKind::Drop;

    std::vector<bool> hit(dips.size(), false);
    for (const auto& e : detect_changes(dipped, params).events) {
      if (e.kind != AlarmKind::Drop) continue;
      const std::size_t k = static_cast<std::size_t>(e.alarm / kSpacing);
      if (k >= 1 && k <= dips.size() && e.alarm - dips[k - 1] <= 2) hit[k - 1] = true;
    }
    std::size_t hits = 0;
    for (bool h : hit) hits += h;

    char arl[32];
    if (false_alarms == 0) {
      std::snprintf(arl, sizeof arl, "> %zu", length);
    } else {
      std::snprintf(arl, sizeof arl, "%.1f", static_cast<double>(length) / static_cast<double>(false_alarms));
    }
    std::printf("%8.3f %14s %13.1f%%\n", alpha, arl, 100.0 * static_cast<double>(hits) / static_cast<double>(dips.size()));
  }
  return 0;
}
