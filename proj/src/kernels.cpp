#include "tislf/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

namespace tislf::kernels {

std::vector<float> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    w[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  std::vector<float> taps(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) taps[i] = static_cast<float>(w[i] / sum);
  return taps;
}

FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  const int w = src.width();
  const int h = src.height();
  FloatImage tmp(w, h);
  FloatImage out(w, h);

#pragma omp parallel
  {
    std::vector<float> padded(static_cast<std::size_t>(w + 2 * r));

#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      const auto in = src.row(y);
      std::fill_n(padded.begin(), r, in[0]);
      std::copy(in.begin(), in.end(), padded.begin() + r);
      std::fill_n(padded.begin() + r + w, r, in[static_cast<std::size_t>(w - 1)]);
      // Tap-outer order vectorizes along x and keeps the per-pixel summation order.
      float* dst = tmp.row(y).data();
      std::fill_n(dst, w, 0.0f);
      for (int k = 0; k <= 2 * r; ++k) {
        const float t = taps[static_cast<std::size_t>(k)];
        const float* p = padded.data() + k;
        for (int x = 0; x < w; ++x) dst[x] += t * p[x];
      }
    }

    // Vertical pass accumulates whole rows so the inner loop runs along x.
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      float* dst = out.row(y).data();
      std::fill_n(dst, w, 0.0f);
      for (int k = -r; k <= r; ++k) {
        const int sy = std::clamp(y + k, 0, h - 1);
        const float t = taps[static_cast<std::size_t>(k + r)];
        const float* s = tmp.row(sy).data();
        for (int x = 0; x < w; ++x) dst[x] += t * s[x];
      }
    }
  }
  return out;
}

FloatImage gaussian_blur_serial(const FloatImage& src, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  const int w = src.width();
  const int h = src.height();
  FloatImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0;
      for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * src(std::clamp(x + k, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0;
      for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * tmp(x, std::clamp(y + k, 0, h - 1));
      out(x, y) = acc;
    }
  }
  return out;
}

FloatImage subtract(const FloatImage& a, const FloatImage& b) {
  assert(a.width() == b.width() && a.height() == b.height());
  FloatImage out(a.width(), a.height());
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  return out;
}

FloatImage subtract_serial(const FloatImage& a, const FloatImage& b) {
  FloatImage out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) out(x, y) = a(x, y) - b(x, y);
  }
  return out;
}

FloatImage decimate(const FloatImage& src) {
  const int w = std::max(1, src.width() / 2);
  const int h = std::max(1, src.height() / 2);
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = src(2 * x, 2 * y);
  }
  return out;
}

namespace {

constexpr float kTwoPi = 2.0f * std::numbers::pi_v<float>;

inline float wrap_angle(float a) {
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

}  // namespace

GradientField gradient_field(const FloatImage& src) {
  const int w = src.width();
  const int h = src.height();
  GradientField g{FloatImage(w, h), FloatImage(w, h)};
#pragma omp parallel for schedule(static)
  for (int y = 1; y < h - 1; ++y) {
    const float* up = src.row(y - 1).data();
    const float* mid = src.row(y).data();
    const float* down = src.row(y + 1).data();
    float* mag = g.magnitude.row(y).data();
    float* ang = g.angle.row(y).data();
    for (int x = 1; x < w - 1; ++x) {
      const float dx = mid[x + 1] - mid[x - 1];
      const float dy = down[x] - up[x];
      mag[x] = std::sqrt(dx * dx + dy * dy);
      ang[x] = wrap_angle(std::atan2(dy, dx));
    }
  }
  return g;
}

GradientField gradient_field_serial(const FloatImage& src) {
  const int w = src.width();
  const int h = src.height();
  GradientField g{FloatImage(w, h), FloatImage(w, h)};
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const float dx = src(x + 1, y) - src(x - 1, y);
      const float dy = src(x, y + 1) - src(x, y - 1);
      g.magnitude(x, y) = std::sqrt(dx * dx + dy * dy);
      g.angle(x, y) = wrap_angle(std::atan2(dy, dx));
    }
  }
  return g;
}

namespace {

// Eight independent partial sums so the compiler can vectorize the reduction.
inline float squared_distance(const float* a, const float* b, std::size_t dim) {
  float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t d = 0;
  for (; d + 8 <= dim; d += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      const float t = a[d + l] - b[d + l];
      lanes[l] += t * t;
    }
  }
  float acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; d < dim; ++d) {
    const float t = a[d] - b[d];
    acc += t * t;
  }
  return acc;
}

inline void offer(TwoNearest& nn, int idx, float d) {
  if (nn.best < 0 || d < nn.best_sq) {
    nn.second_sq = nn.best < 0 ? nn.second_sq : nn.best_sq;
    nn.best_sq = d;
    nn.best = idx;
  } else if (d < nn.second_sq) {
    nn.second_sq = d;
  }
}

}  // namespace

std::vector<TwoNearest> two_nearest(std::span<const float> query, std::span<const float> train, std::size_t dim) {
  const auto nq = static_cast<std::ptrdiff_t>(query.size() / dim);
  const auto nt = static_cast<int>(train.size() / dim);
  std::vector<TwoNearest> out(static_cast<std::size_t>(nq));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < nq; ++i) {
    TwoNearest nn;
    nn.second_sq = std::numeric_limits<float>::infinity();
    const float* q = query.data() + static_cast<std::size_t>(i) * dim;
    for (int j = 0; j < nt; ++j) offer(nn, j, squared_distance(q, train.data() + static_cast<std::size_t>(j) * dim, dim));
    out[static_cast<std::size_t>(i)] = nn;
  }
  return out;
}

std::vector<TwoNearest> two_nearest_serial(std::span<const float> query, std::span<const float> train,
                                           std::size_t dim) {
  const std::size_t nq = query.size() / dim;
  const std::size_t nt = train.size() / dim;
  std::vector<TwoNearest> out(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    TwoNearest nn;
    nn.second_sq = std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < nt; ++j) {
      // Same summation order as squared_distance, so results agree bit for bit.
      float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      std::size_t k = 0;
      for (; k + 8 <= dim; k += 8) {
        for (std::size_t l = 0; l < 8; ++l) {
          const float t = query[i * dim + k + l] - train[j * dim + k + l];
          lanes[l] += t * t;
        }
      }
      float d = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
      for (; k < dim; ++k) {
        const float t = query[i * dim + k] - train[j * dim + k];
        d += t * t;
      }
      offer(nn, static_cast<int>(j), d);
    }
    out[i] = nn;
  }
  return out;
}

}  // namespace tislf::kernels
