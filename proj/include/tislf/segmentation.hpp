#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tislf/features.hpp"
#include "tislf/frame_io.hpp"
#include "tislf/matcher.hpp"

namespace tislf {

/// values[i] compares frames i and i+1.
struct SimilarityVector {
  std::vector<double> values;
  std::vector<bool> degenerate_mask;  // a frame of the pair had no keypoints; value forced to 0

  std::size_t size() const noexcept { return values.size(); }
};

struct CusumParams {
  std::optional<double> delta;  // in-scene mean; nullopt = running mean of the current scene
  double alpha = 0.1;
  int warmup = 5;          // samples needed before the auto delta is trusted
  double rearm_low = 0.0;  // post-change mean

  /// Throws ConfigError.
  void validate() const;
};

enum class AlarmKind { Drop, Resume };

/// Indices are sample indices into the similarity vector.
struct CusumEvent {
  AlarmKind kind = AlarmKind::Drop;
  int alarm = 0;   // sample at which the statistic crossed alpha
  int change = 0;  // estimated first sample of the new regime

  friend bool operator==(const CusumEvent&, const CusumEvent&) = default;
};

struct ChangeDetection {
  std::vector<CusumEvent> events;  // alternating Drop, Resume, Drop, ...
  std::vector<double> statistic;   // g while armed, h while in a transition
  std::vector<bool> alarm;
  std::vector<std::string> warnings;
};

enum class SegmentKind { Scene, Transition };

struct Segment {
  int start_idx = 0;  // inclusive frame indices
  int end_idx = 0;
  SegmentKind kind = SegmentKind::Scene;

  int length() const noexcept { return end_idx - start_idx + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Throws SequenceTooShort below two frames.
SimilarityVector build_similarity_vector(const std::vector<FeatureSet>& frames, const MatcherParams& params = {},
                                         Denominator denominator = Denominator::Min);

/// Detects features on each `small` image first.
SimilarityVector build_similarity_vector(const std::vector<FramePair>& frames, const FeatureParams& features,
                                         const MatcherParams& params = {},
                                         Denominator denominator = Denominator::Min);

/// Page CUSUM for a drop from delta toward rearm_low, then an upward CUSUM for the
/// recovery. Single-threaded; a pure function of (w, params).
ChangeDetection detect_changes(const SimilarityVector& w, const CusumParams& params);

/// Partitions frames [0, n_frames - 1] at the detected events.
std::vector<Segment> segments_from_changes(const ChangeDetection& detection, int n_frames);

std::vector<Segment> segment_video(const SimilarityVector& w, const CusumParams& params);

std::vector<Segment> segment_video(const std::vector<FramePair>& frames, const FeatureParams& features,
                                   const MatcherParams& matcher, const CusumParams& params);

/// `index,w,g,alarm` per sample.
void write_cusum_csv(const std::filesystem::path& path, const SimilarityVector& w, const ChangeDetection& detection);

std::string_view to_string(SegmentKind kind);

}  // namespace tislf
