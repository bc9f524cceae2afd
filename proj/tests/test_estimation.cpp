#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/stats_oracle.hpp"
#include "tislf/errors.hpp"
#include "tislf/estimation.hpp"

using namespace tislf;

namespace {

std::vector<bool> bits(std::initializer_list<int> v) {
  std::vector<bool> out;
  for (int x : v) out.push_back(x != 0);
  return out;
}

std::size_t count(const std::vector<bool>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), true)); }

GroupTimeline timeline(const std::string& group, int n, int first_frame = 0, int scene = 0) {
  GroupTimeline t;
  t.group = group;
  t.scene_id = scene;
  t.first_frame = first_frame;
  t.presence.assign(static_cast<std::size_t>(n), false);
  t.probability.assign(static_cast<std::size_t>(n), 0.01);
  t.box.assign(static_cast<std::size_t>(n), std::nullopt);
  return t;
}

void mark(GroupTimeline& t, int a, int b, double p, Box box = {10, 10, 60, 60}) {
  for (int i = a; i <= b; ++i) {
    t.presence[static_cast<std::size_t>(i)] = true;
    t.probability[static_cast<std::size_t>(i)] = p;
    t.box[static_cast<std::size_t>(i)] = box;
  }
}

}  // namespace

TEST(Smoothing, BridgeExamples) {
  EXPECT_EQ(bridge_gaps(bits({1, 1, 0, 0, 1, 1}), 3), bits({1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(bridge_gaps(bits({1, 1, 0, 0, 0, 0, 1}), 3), bits({1, 1, 0, 0, 0, 0, 1}));
  EXPECT_EQ(bridge_gaps(bits({1, 1, 0, 0, 0, 1}), 3), bits({1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(bridge_gaps(bits({0, 0, 1, 1, 0}), 3), bits({0, 0, 1, 1, 0}));
  EXPECT_EQ(bridge_gaps(bits({1, 0, 1}), 0), bits({1, 0, 1}));
  EXPECT_TRUE(bridge_gaps({}, 3).empty());
}

TEST(Smoothing, PruneExamples) {
  EXPECT_EQ(prune_short(bits({0, 1, 1, 0, 1, 1, 1, 0}), 3), bits({0, 0, 0, 0, 1, 1, 1, 0}));
  EXPECT_EQ(prune_short(bits({1, 1, 1}), 3), bits({1, 1, 1}));
  EXPECT_EQ(prune_short(bits({1, 0, 1}), 1), bits({1, 0, 1}));
  EXPECT_EQ(prune_short(bits({1}), 2), bits({0}));
}

TEST(Smoothing, BridgeRunsBeforePrune) {
  // Two stubs joined by a short gap survive as one run.
  EXPECT_EQ(smooth_presence(bits({0, 1, 0, 1, 0, 0, 0, 0}), EstimationParams{}), bits({0, 1, 1, 1, 0, 0, 0, 0}));
}

TEST(Smoothing, RandomVectorProperties) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(u(rng) * 60);
    const double density = u(rng);
    std::vector<bool> v(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng) < density;
    EstimationParams p;
    p.t_stand = 1 + static_cast<int>(u(rng) * 5);
    p.t_lost = static_cast<int>(u(rng) * 5);
    const auto once = smooth_presence(v, p);
    ASSERT_EQ(smooth_presence(once, p), once) << "trial " << trial;
    const auto reversed = bridge_gaps(prune_short(v, p.t_stand), p.t_lost);
    ASSERT_GE(count(once), count(reversed)) << "trial " << trial;
  }
}

TEST(Glrt, LikelihoodMatchesDirectProduct) {
  const std::vector<double> x{0.4, 0.45, 0.5, 0.38};
  const GaussianStats g{0.42, 0.01};
  EXPECT_NEAR(gaussian_log_likelihood(x, g), std::log(oracle::gaussian_likelihood(x, 0.42, 0.01)), 1e-9);
  const GaussianStats fit = fit_gaussian(x);
  EXPECT_NEAR(fit.mean, 0.4325, 1e-12);
  EXPECT_NEAR(fit.var, (0.0325 * 0.0325 + 0.0175 * 0.0175 + 0.0675 * 0.0675 + 0.0525 * 0.0525) / 4, 1e-12);
}

TEST(Glrt, VarianceFloor) {
  const std::vector<double> same{0.3, 0.3, 0.3};
  EXPECT_EQ(fit_gaussian(same).var, kVarianceFloor);
  EXPECT_TRUE(std::isfinite(gaussian_log_likelihood(same, GaussianStats{0.3, 0})));
}

TEST(Glrt, TieAndMidpointGoToB) {
  // Dyadic values so the midpoint is exact.
  const GaussianStats a{0.75, 0.015625};
  const GaussianStats b{0.25, 0.015625};
  EXPECT_EQ(glrt_resolve(std::vector<double>{0.5}, a, b, 1.0), Assignment::B);
  EXPECT_EQ(glrt_resolve(std::vector<double>{0.25, 0.75}, a, b, 1.0), Assignment::B);
  EXPECT_EQ(glrt_resolve(std::vector<double>{0.55, 0.6}, a, b, 1.0), Assignment::A);
  EXPECT_EQ(glrt_resolve(std::vector<double>{0.25}, a, b, 1.0), Assignment::B);
  EXPECT_EQ(glrt_resolve(std::vector<double>{0.55}, a, b, 1e300), Assignment::B);
  EXPECT_THROW(glrt_resolve(std::vector<double>{}, a, b, 1.0), InternalError);
}

TEST(Glrt, AgreesWithDirectRatio) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(1 + static_cast<std::size_t>(u(rng) * 5));
    for (auto& v : x) v = u(rng);
    const GaussianStats a{u(rng), 0.01 + 0.1 * u(rng)};
    const GaussianStats b{u(rng), 0.01 + 0.1 * u(rng)};
    const double beta = 0.5 + u(rng);
    const double la = oracle::gaussian_likelihood(x, a.mean, a.var);
    const double lb = oracle::gaussian_likelihood(x, b.mean, b.var);
    if (lb == 0 || std::abs(la / lb - beta) < 1e-9 * beta) continue;
    ASSERT_EQ(glrt_resolve(x, a, b, beta), la / lb > beta ? Assignment::A : Assignment::B) << "trial " << trial;
  }
}

TEST(Intervals, DropoutAndSpuriousHit) {
  auto t = timeline("g", 80);
  mark(t, 10, 40, 0.6);
  t.presence[25] = t.presence[26] = false;
  mark(t, 55, 55, 0.3);
  const auto r = estimate_intervals({t}, EstimationParams{}, 10.0);
  ASSERT_EQ(r.intervals.size(), 1u);
  EXPECT_EQ(r.intervals[0].start_idx, 10);
  EXPECT_EQ(r.intervals[0].end_idx, 40);
  EXPECT_DOUBLE_EQ(r.intervals[0].start_s, 1.0);
  EXPECT_DOUBLE_EQ(r.intervals[0].end_s, 4.0);
  EXPECT_DOUBLE_EQ(r.intervals[0].duration_s(10.0), 3.1);
  EXPECT_TRUE(r.decisions.empty());
}

TEST(Intervals, NoCandidatesNoIntervals) {
  const auto r = estimate_intervals({timeline("g", 50)}, EstimationParams{}, 5.0);
  EXPECT_TRUE(r.intervals.empty());
  EXPECT_TRUE(estimate_intervals({}, EstimationParams{}, 5.0).intervals.empty());
}

TEST(Intervals, GlobalIndicesAndOrdering) {
  auto a = timeline("b", 20, 100, 1);
  auto b = timeline("a", 30, 0, 0);
  mark(a, 2, 9, 0.5);
  mark(b, 5, 20, 0.5);
  const auto r = estimate_intervals({a, b}, EstimationParams{}, 2.0);
  ASSERT_EQ(r.intervals.size(), 2u);
  EXPECT_EQ(r.intervals[0].group, "a");
  EXPECT_EQ(r.intervals[0].start_idx, 5);
  EXPECT_EQ(r.intervals[1].start_idx, 102);
  EXPECT_EQ(r.intervals[1].end_idx, 109);
  EXPECT_DOUBLE_EQ(r.intervals[1].start_s, 51.0);
}

TEST(Intervals, HandoverSettledByLikelihood) {
  // A holds frames 0..20 at ~0.6, B takes over from 18 at ~0.25; disputed 18..20 look like A.
  auto A = timeline("A", 40);
  auto B = timeline("B", 40);
  mark(A, 0, 20, 0.6);
  mark(B, 18, 35, 0.25);
  for (int i = 0; i <= 20; ++i) A.probability[static_cast<std::size_t>(i)] = 0.58 + 0.01 * (i % 5);
  for (int i = 18; i <= 35; ++i) B.probability[static_cast<std::size_t>(i)] = 0.23 + 0.01 * (i % 5);
  const auto r = estimate_intervals({A, B}, EstimationParams{}, 10.0);
  ASSERT_EQ(r.decisions.size(), 1u);
  EXPECT_EQ(r.decisions[0].winner, "A");
  EXPECT_EQ(r.decisions[0].start_idx, 18);
  EXPECT_EQ(r.decisions[0].end_idx, 20);
  EXPECT_GT(r.decisions[0].log_ratio, 0);
  ASSERT_EQ(r.intervals.size(), 2u);
  EXPECT_EQ(r.intervals[0].end_idx, 20);
  EXPECT_EQ(r.intervals[1].start_idx, 21);
}

TEST(Intervals, DisjointBoxesAreNotDisputed) {
  auto A = timeline("A", 40);
  auto B = timeline("B", 40);
  mark(A, 0, 20, 0.6, Box{0, 0, 20, 20});
  mark(B, 18, 35, 0.25, Box{100, 100, 140, 140});
  const auto r = estimate_intervals({A, B}, EstimationParams{}, 10.0);
  EXPECT_TRUE(r.decisions.empty());
  ASSERT_EQ(r.intervals.size(), 2u);
  EXPECT_EQ(r.intervals[0].end_idx, 20);
  EXPECT_EQ(r.intervals[1].start_idx, 18);
}

TEST(Intervals, DifferentScenesNeverInteract) {
  auto A = timeline("A", 40, 0, 0);
  auto B = timeline("B", 40, 0, 1);
  mark(A, 0, 20, 0.6);
  mark(B, 18, 35, 0.25);
  EXPECT_TRUE(estimate_intervals({A, B}, EstimationParams{}, 10.0).decisions.empty());
}

TEST(Intervals, DurationsSumToPresentFrames) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = timeline("g", 120);
    for (int i = 0; i < 120; ++i) {
      if (u(rng) < 0.4) mark(t, i, i, 0.5);
    }
    const auto r = estimate_intervals({t}, EstimationParams{}, 4.0);
    double total = 0;
    for (const auto& iv : r.intervals) total += iv.duration_s(4.0);
    EXPECT_NEAR(total, count(r.presence[0]) / 4.0, 1e-9);
  }
}

TEST(Intervals, ParamsValidate) {
  EstimationParams p;
  p.t_stand = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.beta = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(estimate_intervals({}, EstimationParams{}, 0), ConfigError);
}
