#pragma once

#include <array>
#include <optional>
#include <span>

namespace tislf {

struct Point2 {
  double x = 0;
  double y = 0;
};

/// Row-major 3x3 projective transform, normalized so that h[8] == 1 when possible.
using Homography = std::array<double, 9>;

Point2 apply(const Homography& h, Point2 p) noexcept;

/// Euclidean distance between H(src) and dst; +inf when src maps to infinity.
double transfer_error(const Homography& h, Point2 src, Point2 dst) noexcept;

/// True when any three of the four points are (nearly) collinear.
bool degenerate_quad(std::span<const Point2, 4> pts) noexcept;

/// Every triangle of the sample keeps its winding under the mapping; a
/// homography of a planar surface seen from its front side cannot flip one.
bool orientation_consistent(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) noexcept;

/// Exact fit through four correspondences. nullopt for degenerate input.
std::optional<Homography> fit_homography_minimal(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);

/// Normalized DLT least-squares fit over n >= 4 correspondences.
std::optional<Homography> fit_homography(std::span<const Point2> src, std::span<const Point2> dst);

}  // namespace tislf
