#include <gtest/gtest.h>
#include <omp.h>

#include <random>

#include "oracles/stats_oracle.hpp"
#include "support.hpp"
#include "tislf/errors.hpp"
#include "tislf/procedural.hpp"
#include "tislf/recognition.hpp"

using namespace tislf;

namespace {

// Keypoints at the given x positions, y fixed, on a width x 60 target.
TargetImage target_with_xs(const std::vector<double>& xs, int width, int chunks) {
  std::mt19937_64 rng(1);
  std::vector<Point2> pts;
  for (double x : xs) pts.push_back({x, 30});
  TargetImage t;
  t.id = "t";
  t.group_id = "g";
  t.features = testing_support::feature_set_at(pts, rng);
  t.width = width;
  t.height = 60;
  t.chunks = chunks;
  return t;
}

// Target pasted at (80, 60) into a textured 320x240 frame; the right `occluded`
// fraction of it painted over.
GrayImage composite(const GrayImage& target, double occluded, std::uint64_t seed = 5) {
  FloatImage bg = synth::value_noise(320, 240, seed, synth::NoiseParams{});
  synth::normalize_range(bg, 0.1f, 0.9f);
  GrayImage frame = to_gray8(bg);
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      frame(80 + x, 60 + y) = x >= target.width() * (1 - occluded) ? 115 : target(x, y);
    }
  }
  return frame;
}

ChunkDistribution dist(std::vector<double> m) {
  ChunkDistribution d;
  d.total = 0;
  for (double v : m) d.total += v;
  d.mass = std::move(m);
  return d;
}

MatchingMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows, int chunks = 1) {
  MatchingMatrix m;
  m.rows = static_cast<int>(rows.size());
  m.cols = static_cast<int>(rows.front().size());
  m.chunks = chunks;
  for (const auto& r : rows) {
    for (double v : r) {
      m.matrix.push_back(v);
      for (int k = 0; k < chunks; ++k) m.tensor.push_back(v / chunks);
      m.boxes.push_back(Box{0, 0, 10, 10});
    }
  }
  return m;
}

std::vector<int> mask_to_indices(std::uint64_t mask, std::size_t n) {
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask >> i & 1) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Divisive splitting with the subset oracle at every level.
std::vector<int> divisive_oracle(const std::vector<double>& row, double gap) {
  std::vector<int> keep, rest(row.size());
  std::iota(rest.begin(), rest.end(), 0);
  while (rest.size() >= 2) {
    std::vector<double> v;
    for (int i : rest) v.push_back(row[static_cast<std::size_t>(i)]);
    const auto s = oracle::best_subset_split(v);
    if (s.high_mask == 0 || s.gap < gap) break;
    std::vector<int> low;
    for (std::size_t k = 0; k < rest.size(); ++k) (s.high_mask >> k & 1 ? keep : low).push_back(rest[k]);
    rest = low;
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

TEST(Reference, UniformKeypointsSpreadEvenly) {
  std::vector<double> xs;
  for (int i = 0; i < 400; ++i) xs.push_back(0.25 + i * 0.25);
  const auto q = self_match_reference(target_with_xs(xs, 100, 4));
  for (double m : q.mass) EXPECT_NEAR(m, 0.25, 0.01);
  EXPECT_EQ(q.total, 1.0);
}

TEST(Reference, AllInLeftBand) {
  const auto q = self_match_reference(target_with_xs({1, 5, 10, 20, 24.9}, 100, 4));
  EXPECT_EQ(q.mass, (std::vector<double>{1, 0, 0, 0}));
}

TEST(Reference, SumsToExactlyOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 97);
    const int w = 16 + static_cast<int>(u(rng) * 300);
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(u(rng) * (w - 1e-6));
    const auto q = self_match_reference(target_with_xs(xs, w, 1 + static_cast<int>(u(rng) * 12)));
    double s = 0;
    for (double m : q.mass) s += m;
    ASSERT_EQ(s, 1.0) << "trial " << trial;
    ASSERT_EQ(q.total, 1.0);
  }
}

TEST(FrameTarget, VisibleTargetMatchesItsShape) {
  const GrayImage img = synth::make_target_image(160, 120, 77);
  const TargetImage t = make_target("a", "a", img, FeatureParams{});
  const auto q = self_match_reference(t);
  const auto p = frame_target_distribution(detect_and_describe(composite(img, 0)), t);
  EXPECT_GE(p.total, 0.3);
  EXPECT_LE(p.total, 1.0 + 1e-12);
  EXPECT_LE(kl_divergence(p, q), RecognitionParams{}.kl_thresh);
}

TEST(FrameTarget, UnrelatedFrameHasLittleMass) {
  const TargetImage t = make_target("a", "a", synth::make_target_image(160, 120, 77), FeatureParams{});
  const auto p = frame_target_distribution(detect_and_describe(composite(synth::make_target_image(160, 120, 78), 0)), t);
  EXPECT_LT(p.total, 0.05);
}

TEST(FrameTarget, RightOcclusionEmptiesRightBands) {
  const GrayImage img = synth::make_target_image(160, 120, 77);
  const TargetImage t = make_target("a", "a", img, FeatureParams{}, 8);
  const auto p = frame_target_distribution(detect_and_describe(composite(img, 0.5)), t);
  double left = 0, right = 0;
  for (int k = 0; k < 4; ++k) left += p.mass[static_cast<std::size_t>(k)];
  for (int k = 5; k < 8; ++k) right += p.mass[static_cast<std::size_t>(k)];
  EXPECT_GT(left, 0.1);
  EXPECT_LT(right, 0.02);
}

TEST(Kl, IdentityIsZero) {
  const auto p = dist({0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-9);
  EXPECT_NEAR(kl_divergence(dist({0.05, 0.1, 0.15, 0.2}), p), 0.0, 1e-9);
}

TEST(Kl, SkewedReferenceMatchesDirectSum) {
  const auto p = dist({0.25, 0.25, 0.25, 0.25});
  const auto q = dist({0.97, 0.01, 0.01, 0.01});
  EXPECT_NEAR(kl_divergence(p, q, 1e-4), oracle::kl_direct(p.mass, q.mass, 1e-4), 1e-9);
}

TEST(Kl, EmptyPIsInfinite) {
  EXPECT_EQ(kl_divergence(dist({0, 0, 0}), dist({0.5, 0.5, 0})), kInfiniteDivergence);
}

TEST(Kl, RandomPairsMatchDirectSumAndStayNonNegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t P = 1 + static_cast<std::size_t>(u(rng) * 16);
    std::vector<double> p(P), q(P);
    for (auto& v : p) v = u(rng) < 0.3 ? 0 : u(rng);
    for (auto& v : q) v = u(rng) < 0.3 ? 0 : u(rng);
    q[0] += 1e-3;
    if (std::accumulate(p.begin(), p.end(), 0.0) == 0) continue;
    const double got = kl_divergence(dist(p), dist(q));
    ASSERT_NEAR(got, oracle::kl_direct(p, q, 1e-4), 1e-9) << "trial " << trial;
    ASSERT_GE(got, 0.0);
  }
}

TEST(Partition, MatchesExhaustiveSubsets) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * 9);
    std::vector<double> row(n);
    // Coarse values so ties happen.
    for (auto& v : row) v = std::round(u(rng) * 20) / 20;
    const auto s = oracle::best_subset_split(row);
    const auto got = optimal_two_partition(row);
    if (s.high_mask == 0) {
      EXPECT_FALSE(got);
      continue;
    }
    ASSERT_TRUE(got);
    double cost = 0;
    for (int i : got->high) cost += std::pow(row[static_cast<std::size_t>(i)] - got->high_mean, 2);
    for (int i : got->low) cost += std::pow(row[static_cast<std::size_t>(i)] - got->low_mean, 2);
    EXPECT_NEAR(cost, s.cost, 1e-9) << "trial " << trial;
    for (int i : got->high) {
      for (int j : got->low) ASSERT_GT(row[static_cast<std::size_t>(i)], row[static_cast<std::size_t>(j)]);
    }
    if (s.unique) {
      EXPECT_EQ(got->high, mask_to_indices(s.high_mask, n)) << "trial " << trial;
      EXPECT_NEAR(got->high_mean - got->low_mean, s.gap, 1e-12);
    }
  }
}

TEST(Partition, DivisiveClusterMatchesRepeatedOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * 9);
    std::vector<double> row(n);
    for (auto& v : row) v = u(rng) < 0.6 ? 0.05 * u(rng) : u(rng);
    EXPECT_EQ(high_cluster(row, 0.08, 0.13), divisive_oracle(row, 0.08)) << "trial " << trial;
  }
}

TEST(Partition, Examples) {
  EXPECT_EQ(high_cluster(std::vector<double>{0.9, 0.05, 0.04, 0.06}, 0.08, 0.13), (std::vector<int>{0}));
  EXPECT_TRUE(high_cluster(std::vector<double>{0.05, 0.05, 0.05}, 0.08, 0.13).empty());
  EXPECT_EQ(high_cluster(std::vector<double>{0.8, 0.75, 0.02}, 0.08, 0.13), (std::vector<int>{0, 1}));
  // A weaker but distinct second target survives next to a strong one.
  EXPECT_EQ(high_cluster(std::vector<double>{0.5, 0.15, 0.02, 0.02, 0.02}, 0.08, 0.13), (std::vector<int>{0, 1}));
}

TEST(Partition, SingleColumnUsesFloor) {
  EXPECT_EQ(high_cluster(std::vector<double>{0.2}, 0.08, 0.13), (std::vector<int>{0}));
  EXPECT_TRUE(high_cluster(std::vector<double>{0.1}, 0.08, 0.13).empty());
  EXPECT_TRUE(high_cluster(std::vector<double>{}, 0.08, 0.13).empty());
}

namespace {

struct GridFixture {
  std::vector<TargetImage> targets;
  std::vector<FeatureSet> frames;
  std::vector<GrayImage> images;
};

GridFixture grid() {
  GridFixture f;
  for (int k = 0; k < 3; ++k) {
    f.images.push_back(synth::make_target_image(160, 120, 300 + static_cast<std::uint64_t>(k)));
    f.targets.push_back(make_target("t" + std::to_string(k), k == 2 ? "g1" : "g" + std::to_string(k), f.images.back(), FeatureParams{}));
  }
  f.frames.push_back(detect_and_describe(composite(f.images[0], 0, 1)));
  f.frames.push_back(detect_and_describe(composite(f.images[1], 0.3, 2)));
  f.frames.push_back(detect_and_describe(composite(synth::make_target_image(160, 120, 999), 0, 3)));
  f.frames.push_back(detect_and_describe(composite(f.images[2], 0, 4)));
  return f;
}

}  // namespace

TEST(MatchingMatrix, RowsPeakAtThePresentTarget) {
  const auto f = grid();
  const auto m = build_matching_matrix(f.frames, f.targets, MatcherParams{}, 2, 40);
  ASSERT_EQ(m.rows, 4);
  ASSERT_EQ(m.cols, 3);
  EXPECT_EQ(m.scene_id, 2);
  EXPECT_EQ(m.first_frame, 40);
  for (int i : {0, 1, 3}) {
    const int want = i == 3 ? 2 : i;
    for (int j = 0; j < 3; ++j) {
      if (j != want) EXPECT_GT(m.at(i, want), m.at(i, j));
    }
    EXPECT_TRUE(m.box(i, want));
  }
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      double s = 0;
      for (int k = 0; k < m.chunks; ++k) s += m.chunk(i, j, k);
      ASSERT_LT(std::abs(m.at(i, j) - s), 1e-12);
      ASSERT_LE(m.at(i, j), 1.0 + 1e-12);
    }
  }
}

TEST(MatchingMatrix, ParallelMatchesSerial) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto f = grid();
  const auto a = build_matching_matrix(f.frames, f.targets);
  const auto b = build_matching_matrix_serial(f.frames, f.targets);
  EXPECT_EQ(a.tensor, b.tensor);
  EXPECT_EQ(a.matrix, b.matrix);
  omp_set_num_threads(saved);
}

TEST(MatchingMatrix, NoTargetsGivesNoColumns) {
  const auto f = grid();
  const auto m = build_matching_matrix(f.frames, {});
  EXPECT_EQ(m.rows, 4);
  EXPECT_EQ(m.cols, 0);
  EXPECT_TRUE(m.matrix.empty());
}

TEST(MatchingMatrix, MixedChunkCountsRejected) {
  auto f = grid();
  f.targets[1].chunks = 4;
  EXPECT_THROW(build_matching_matrix(f.frames, f.targets), Error);
}

TEST(Candidates, EndToEndOnGrid) {
  const auto f = grid();
  const auto m = build_matching_matrix(f.frames, f.targets);
  std::vector<ChunkDistribution> refs;
  for (const auto& t : f.targets) refs.push_back(self_match_reference(t));
  const auto c = select_candidates(m, f.targets, refs, RecognitionParams{});
  std::vector<std::pair<int, int>> got;
  for (const auto& x : c) got.emplace_back(x.frame_idx, x.target);
  EXPECT_EQ(got, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {3, 2}}));

  const auto tl = group_timelines(m, f.targets, c);
  ASSERT_EQ(tl.size(), 2u);  // g0, g1 (t1 and t2 share g1)
  EXPECT_EQ(tl[1].group, "g1");
  EXPECT_EQ(tl[1].presence, (std::vector<bool>{false, true, false, true}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(tl[1].probability[static_cast<std::size_t>(i)], std::max(m.at(i, 1), m.at(i, 2)));
  EXPECT_TRUE(tl[1].box[1]);
  EXPECT_FALSE(tl[1].box[0]);
}

TEST(Candidates, KlFilterOnlyShrinks) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int cols = 1 + static_cast<int>(u(rng) * 6);
    std::vector<std::vector<double>> rows(6, std::vector<double>(static_cast<std::size_t>(cols)));
    for (auto& r : rows) {
      for (auto& v : r) v = u(rng) < 0.7 ? 0.05 * u(rng) : u(rng);
    }
    MatchingMatrix m = matrix_from_rows(rows, 4);
    for (auto& v : m.tensor) v *= 2 * u(rng);  // reshape chunk profiles, keep totals irrelevant to J
    std::vector<TargetImage> targets(static_cast<std::size_t>(cols));
    std::vector<ChunkDistribution> refs;
    for (int j = 0; j < cols; ++j) {
      targets[static_cast<std::size_t>(j)].id = "t" + std::to_string(j);
      refs.push_back(dist({0.25, 0.25, 0.25, 0.25}));
    }
    const auto with = select_candidates(m, targets, refs, RecognitionParams{}, true);
    const auto without = select_candidates(m, targets, refs, RecognitionParams{}, false);
    for (const auto& c : with) {
      EXPECT_NE(std::find_if(without.begin(), without.end(), [&](const CandidatePair& o) { return o.frame_idx == c.frame_idx && o.target == c.target; }),
                without.end());
      EXPECT_LE(c.kl_divergence, RecognitionParams{}.kl_thresh);
      EXPECT_GE(c.probability, RecognitionParams{}.min_mass);
    }
    // Without the KL filter the set is exactly J.
    for (int i = 0; i < 6; ++i) {
      std::vector<int> j_set;
      for (const auto& c : without) {
        if (c.frame_idx == i) j_set.push_back(c.target);
      }
      EXPECT_EQ(j_set, high_cluster(rows[static_cast<std::size_t>(i)], 0.08, 0.13));
    }
  }
}

TEST(Candidates, ParamsValidate) {
  RecognitionParams p;
  p.kl_thresh = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.kmeans_gap = -1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.chunks = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}
