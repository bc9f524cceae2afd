#pragma once

// Data-parallel inner loops of the feature stack. Every OpenMP kernel here has
// a `_serial` twin written as the plainest possible loop nest; the twins are
// the reference the parallel versions are tested and benchmarked against.

#include <cstddef>
#include <span>
#include <vector>

#include "tislf/image.hpp"

namespace tislf::kernels {

/// Normalized 1-D Gaussian taps, radius ceil(4 sigma), at least 1.
std::vector<float> gaussian_taps(double sigma);

/// Separable Gaussian blur with clamp-to-edge borders.
FloatImage gaussian_blur(const FloatImage& src, double sigma);
FloatImage gaussian_blur_serial(const FloatImage& src, double sigma);

/// a - b, elementwise. Images must share dimensions.
FloatImage subtract(const FloatImage& a, const FloatImage& b);
FloatImage subtract_serial(const FloatImage& a, const FloatImage& b);

/// Every other pixel in both directions (octave step); odd sides round down.
FloatImage decimate(const FloatImage& src);

/// Undivided central-difference (x[+1] - x[-1]) gradient magnitude and angle in [0, 2pi). Border pixels
/// get zero magnitude.
struct GradientField {
  FloatImage magnitude;
  FloatImage angle;
};
GradientField gradient_field(const FloatImage& src);
GradientField gradient_field_serial(const FloatImage& src);

/// Two nearest neighbours of one query row among the train rows, by squared L2.
struct TwoNearest {
  int best = -1;
  float best_sq = 0;    // squared distance to best
  float second_sq = 0;  // squared distance to runner-up; +inf if there is none
};

/// `query` and `train` are row-major arrays of `dim`-wide descriptors.
std::vector<TwoNearest> two_nearest(std::span<const float> query, std::span<const float> train, std::size_t dim);
std::vector<TwoNearest> two_nearest_serial(std::span<const float> query, std::span<const float> train,
                                           std::size_t dim);

}  // namespace tislf::kernels
