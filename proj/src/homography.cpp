#include "tislf/homography.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace tislf {

Point2 apply(const Homography& h, Point2 p) noexcept {
  const double w = h[6] * p.x + h[7] * p.y + h[8];
  return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

double transfer_error(const Homography& h, Point2 src, Point2 dst) noexcept {
  const double w = h[6] * src.x + h[7] * src.y + h[8];
  if (std::abs(w) < 1e-12) return std::numeric_limits<double>::infinity();
  const double x = (h[0] * src.x + h[1] * src.y + h[2]) / w;
  const double y = (h[3] * src.x + h[4] * src.y + h[5]) / w;
  return std::hypot(x - dst.x, y - dst.y);
}

bool degenerate_quad(std::span<const Point2, 4> p) noexcept {
  constexpr double kMinArea2 = 1e-6;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        const double cross = (p[j].x - p[i].x) * (p[k].y - p[i].y) - (p[j].y - p[i].y) * (p[k].x - p[i].x);
        if (std::abs(cross) < kMinArea2) return true;
      }
    }
  }
  return false;
}

bool orientation_consistent(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) noexcept {
  auto cross = [](const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    const int k = (i + 2) % 4;
    if ((cross(src[i], src[j], src[k]) > 0) != (cross(dst[i], dst[j], dst[k]) > 0)) return false;
  }
  return true;
}

namespace {

bool finalize(Eigen::Matrix3d m, Homography& out) {
  if (!m.allFinite()) return false;
  if (std::abs(m(2, 2)) > 1e-12) m /= m(2, 2);
  else m /= m.norm();
  if (std::abs(m.determinant()) < 1e-12) return false;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = m(r, c);
  }
  return true;
}

// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Point2> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean = 0;
  for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0 ? std::sqrt(2.0) / mean : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

}  // namespace

std::optional<Homography> fit_homography_minimal(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
  if (degenerate_quad(src) || degenerate_quad(dst)) return std::nullopt;
  const Eigen::Matrix3d ts = normalizer(src);
  const Eigen::Matrix3d td = normalizer(dst);

  // h22 fixed to 1 in normalized coordinates: an 8x8 linear system.
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    a.row(2 * i) << s.x(), s.y(), 1, 0, 0, 0, -d.x() * s.x(), -d.x() * s.y();
    a.row(2 * i + 1) << 0, 0, 0, s.x(), s.y(), 1, -d.y() * s.x(), -d.y() * s.y();
    b(2 * i) = d.x();
    b(2 * i + 1) = d.y();
  }
  const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Matrix<double, 8, 1> x = lu.solve(b);
  Eigen::Matrix3d hn;
  hn << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), 1.0;
  Homography out;
  if (!finalize(td.inverse() * hn * ts, out)) return std::nullopt;
  return out;
}

std::optional<Homography> fit_homography(std::span<const Point2> src, std::span<const Point2> dst) {
  const std::size_t n = src.size();
  if (n < 4 || dst.size() != n) return std::nullopt;
  const Eigen::Matrix3d ts = normalizer(src);
  const Eigen::Matrix3d td = normalizer(dst);
  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -s.x(), -s.y(), -1, 0, 0, 0, d.x() * s.x(), d.x() * s.y(), d.x();
    a.row(r + 1) << 0, 0, 0, -s.x(), -s.y(), -1, d.y() * s.x(), d.y() * s.y(), d.y();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Homography out;
  if (!finalize(td.inverse() * hn * ts, out)) return std::nullopt;
  return out;
}

}  // namespace tislf
