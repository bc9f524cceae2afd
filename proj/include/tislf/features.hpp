#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tislf/image.hpp"

namespace tislf {

struct Keypoint {
  float x = 0;            // source-image pixels, subpixel
  float y = 0;
  float scale = 0;        // sigma of the detection level, in source pixels
  float orientation = 0;  // radians, [0, 2pi)
  float response = 0;     // |DoG| at the refined extremum
};

inline constexpr std::size_t kDescriptorSize = 128;
using Descriptor = std::array<float, kDescriptorSize>;

/// Keypoints with parallel descriptors, ordered by (scale desc, response desc, y, x).
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
  int width = 0;
  int height = 0;

  std::size_t size() const noexcept { return keypoints.size(); }
  bool empty() const noexcept { return keypoints.empty(); }

  /// Descriptors as one contiguous row-major array.
  std::span<const float> descriptor_data() const noexcept {
    return {descriptors.empty() ? nullptr : descriptors.front().data(), descriptors.size() * kDescriptorSize};
  }
};

struct FeatureParams {
  int octaves = 4;
  int scales_per_octave = 3;
  double initial_sigma = 1.6;
  double contrast_thresh = 0.03;  // on [0,1] intensities
  double edge_thresh = 10.0;      // principal-curvature ratio r
  int max_keypoints = 2000;
};

/// Pluggable local-feature detector.
class FeatureDetector {
public:
  virtual ~FeatureDetector() = default;
  virtual FeatureSet detect(const GrayImage& image) const = 0;
};

/// Difference-of-Gaussians detector with 4x4x8 gradient-histogram descriptors.
class SiftDetector final : public FeatureDetector {
public:
  explicit SiftDetector(FeatureParams params = {});
  FeatureSet detect(const GrayImage& image) const override;
  const FeatureParams& params() const noexcept { return params_; }

private:
  FeatureParams params_;
};

/// Throws ImageTooSmall below 16x16. Deterministic for identical inputs.
FeatureSet detect_and_describe(const GrayImage& image, const FeatureParams& params = {});

/// One keypoint per line: `x y scale orientation response d0 .. d127`.
void write_feature_dump(std::ostream& out, const FeatureSet& features);

}  // namespace tislf
