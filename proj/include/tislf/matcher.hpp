#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tislf/features.hpp"
#include "tislf/homography.hpp"

namespace tislf {

struct Match {
  int query = 0;  // index into the first FeatureSet
  int train = 0;  // index into the second FeatureSet
  float distance = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchResult {
  std::vector<Match> inliers;
  std::size_t n_query_keypoints = 0;
  std::size_t n_train_keypoints = 0;
  std::optional<Homography> model;  // present iff inliers.size() >= 4
};

/// Which keypoint total normalizes a match count.
enum class Denominator {
  Second,  // keypoints of the second (reference / target) image
  Min,     // min of the two totals; symmetric
  Union,   // |a| + |b| - matches
};

std::optional<Denominator> parse_denominator(std::string_view text);
std::string_view to_string(Denominator d);

struct MatcherParams {
  double ratio = 0.75;
  double single_neighbor_max = 0.3;  // absolute distance accepted when b has one descriptor
  double epsilon_px = 3.0;
  int max_iters = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 42;
};

/// Nearest-neighbour ratio test plus one-to-one filtering on the train side.
/// Sorted by query index.
std::vector<Match> match_descriptors(const FeatureSet& a, const FeatureSet& b, double ratio = 0.75,
                                     double single_neighbor_max = 0.3);

/// Same contract, brute force without OpenMP. Kept as the reference.
std::vector<Match> match_descriptors_serial(const FeatureSet& a, const FeatureSet& b, double ratio = 0.75,
                                            double single_neighbor_max = 0.3);

/// Homography RANSAC over candidate matches (a-side points mapped onto b-side points).
///
/// Fewer than four candidates, or fewer than four distinct a-side positions,
/// pass through unchanged with no model. Otherwise the largest consensus set
/// (transfer error < epsilon) is refit on all its members; if no sample ever
/// reaches four inliers the result is empty.
MatchResult ransac_verify(const std::vector<Match>& candidates, const FeatureSet& a, const FeatureSet& b,
                          const MatcherParams& params = {});

struct MatchScore {
  double probability = 0;
  bool degenerate = false;  // denominator was zero
  MatchResult result;
};

/// |verified inliers| / keypoint total chosen by `denominator`, in [0,1].
MatchScore match_probability(const FeatureSet& a, const FeatureSet& b, const MatcherParams& params = {},
                             Denominator denominator = Denominator::Second);

}  // namespace tislf
