#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tislf/features.hpp"
#include "tislf/image.hpp"
#include "tislf/matcher.hpp"
#include "tislf/targets.hpp"

namespace tislf {

struct TargetImage {
  std::string id;
  std::string group_id;
  FeatureSet features;
  int width = 0;
  int height = 0;
  int chunks = 8;

  /// Throws ConfigError / InputError.
  void validate() const;
};

TargetImage make_target(std::string id, std::string group_id, const GrayImage& image, const FeatureParams& features,
                        int chunks = 8);

/// Decodes and describes every manifest entry, in manifest order.
std::vector<TargetImage> load_targets(const std::vector<TargetEntry>& manifest, const FeatureParams& features,
                                      int chunks = 8);

/// Per vertical band of the target; mass[k] covers x in [k*W/P, (k+1)*W/P).
struct ChunkDistribution {
  std::vector<double> mass;
  double total = 0;
};

constexpr double kInfiniteDivergence = std::numeric_limits<double>::infinity();

/// Spatial histogram of the target's keypoints; total is exactly 1.
ChunkDistribution self_match_reference(const TargetImage& target);

/// Axis-aligned box in frame pixels.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool overlaps(const Box& o) const noexcept { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }
};

struct FrameTargetMatch {
  ChunkDistribution p;
  std::optional<Box> frame_box;  // extent of the frame-side inliers
};

/// Verified frame -> target matches, binned by the target-side x. Sums to <= 1.
FrameTargetMatch match_frame_to_target(const FeatureSet& frame, const TargetImage& target,
                                       const MatcherParams& params = {});

ChunkDistribution frame_target_distribution(const FeatureSet& frame, const TargetImage& target,
                                            const MatcherParams& params = {});

/// KL(p_hat || q_hat) after normalizing and eps-smoothing both; +inf when p is all zero.
double kl_divergence(const ChunkDistribution& p, const ChunkDistribution& q, double eps = 1e-4);

/// Rows are scene frames, columns are targets.
struct MatchingMatrix {
  int scene_id = 0;
  int first_frame = 0;  // global index of row 0
  int rows = 0;
  int cols = 0;
  int chunks = 0;
  std::vector<double> tensor;  // rows x cols x chunks
  std::vector<double> matrix;  // rows x cols
  std::vector<std::optional<Box>> boxes;

  double at(int i, int j) const { return matrix[index(i, j)]; }
  double chunk(int i, int j, int k) const { return tensor[index(i, j) * static_cast<std::size_t>(chunks) + k]; }
  std::span<const double> chunks_of(int i, int j) const {
    return {tensor.data() + index(i, j) * static_cast<std::size_t>(chunks), static_cast<std::size_t>(chunks)};
  }
  const std::optional<Box>& box(int i, int j) const { return boxes[index(i, j)]; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j);
  }
};

/// All targets must share one chunk count. Parallel over the (frame, target) grid.
MatchingMatrix build_matching_matrix(std::span<const FeatureSet> scene_frames, const std::vector<TargetImage>& targets,
                                     const MatcherParams& params = {}, int scene_id = 0, int first_frame = 0);

/// Same result, computed in a plain double loop.
MatchingMatrix build_matching_matrix_serial(std::span<const FeatureSet> scene_frames,
                                            const std::vector<TargetImage>& targets, const MatcherParams& params = {},
                                            int scene_id = 0, int first_frame = 0);

struct RecognitionParams {
  int chunks = 8;
  double kl_thresh = 0.85;
  double min_mass = 0.05;
  double kmeans_gap = 0.08;
  double kl_eps = 1e-4;

  void validate() const;
};

struct CandidatePair {
  int frame_idx = 0;  // global frame index
  int target = 0;     // column of the matrix
  std::string target_id;
  double probability = 0;
  double kl_divergence = 0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct TwoPartition {
  std::vector<int> low;   // ascending indices into the row
  std::vector<int> high;
  double low_mean = 0;
  double high_mean = 0;
};

/// Minimum within-cluster sum of squares split of a row into two non-empty
/// clusters. Equal values are never separated; nullopt when all are equal.
std::optional<TwoPartition> optimal_two_partition(std::span<const double> row);

/// Distinctive entries of a row: the high side of the optimal two-partition is
/// taken while its centroid gap is at least `gap`, then the low side is split
/// again the same way. A single-entry row is kept iff it reaches `single_floor`.
std::vector<int> high_cluster(std::span<const double> row, double gap, double single_floor);

/// R ∩ J, ordered by (frame, target). `use_kl = false` drops the R filter.
std::vector<CandidatePair> select_candidates(const MatchingMatrix& mat, const std::vector<TargetImage>& targets,
                                             const std::vector<ChunkDistribution>& refs,
                                             const RecognitionParams& params, bool use_kl = true);

/// One group's view of a scene.
struct GroupTimeline {
  std::string group;
  int scene_id = 0;
  int first_frame = 0;
  std::vector<bool> presence;         // OR over member images
  std::vector<double> probability;    // max over member images
  std::vector<std::optional<Box>> box;  // union over candidate members
};

/// Groups in order of first appearance in `targets`.
std::vector<GroupTimeline> group_timelines(const MatchingMatrix& mat, const std::vector<TargetImage>& targets,
                                           const std::vector<CandidatePair>& candidates);

}  // namespace tislf
