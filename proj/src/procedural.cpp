#include "tislf/procedural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace tislf::synth {

namespace {

// Counter-based generator; output depends only on (seed, draw number).
class Stream {
public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix64(state_++); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(uniform() * n); }

private:
  std::uint64_t state_;
};

inline double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL +
                                             static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

}  // namespace

FloatImage value_noise(int width, int height, std::uint64_t seed, const NoiseParams& params, double offset_x,
                       double offset_y) {
  FloatImage out(width, height, 0.0f);
  double amplitude = 1.0;
  double total = 0.0;
  for (int o = 0; o < params.octaves; ++o) {
    const double period = params.base_period / std::pow(2.0, o);
    const std::uint64_t oseed = derive_seed(seed, static_cast<std::uint64_t>(o));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
      const double fy = (y + offset_y) / period;
      const double y0 = std::floor(fy);
      const double ty = fade(fy - y0);
      const auto iy = static_cast<std::int64_t>(y0);
      for (int x = 0; x < width; ++x) {
        const double fx = (x + offset_x) / period;
        const double x0 = std::floor(fx);
        const double tx = fade(fx - x0);
        const auto ix = static_cast<std::int64_t>(x0);
        const double a = lattice(oseed, ix, iy);
        const double b = lattice(oseed, ix + 1, iy);
        const double c = lattice(oseed, ix, iy + 1);
        const double d = lattice(oseed, ix + 1, iy + 1);
        const double v = (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
        out(x, y) += static_cast<float>(amplitude * v);
      }
    }
    total += amplitude;
    amplitude *= params.persistence;
  }
  for (float& v : out.pixels()) v = static_cast<float>(v / total);
  return out;
}

void normalize_range(FloatImage& image, float lo, float hi) {
  if (image.empty()) return;
  const auto [mn, mx] = std::minmax_element(image.pixels().begin(), image.pixels().end());
  const float a = *mn;
  const float span = *mx - a;
  for (float& v : image.pixels()) v = span > 0 ? lo + (hi - lo) * (v - a) / span : (lo + hi) / 2;
}

GrayImage make_target_image(int width, int height, std::uint64_t seed) {
  NoiseParams np;
  np.octaves = 4;
  np.base_period = std::max(width, height) / 6.0;
  np.persistence = 0.7;
  FloatImage img = value_noise(width, height, derive_seed(seed, 1), np);
  normalize_range(img, 0.2f, 0.8f);

  Stream rng(derive_seed(seed, 2));
  const int shapes = 40 + rng.below(20);
  const double side = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const int kind = rng.below(3);
    const double cx = rng.uniform(0.1, 0.9) * width;
    const double cy = rng.uniform(0.1, 0.9) * height;
    const double rx = rng.uniform(0.03, 0.12) * side;
    const double ry = rng.uniform(0.03, 0.12) * side;
    const double theta = rng.uniform(0, std::numbers::pi);
    const auto value = static_cast<float>(rng.uniform() < 0.5 ? rng.uniform(0.0, 0.2) : rng.uniform(0.8, 1.0));
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double u = (dx * ct + dy * st) / rx;
        const double v = (-dx * st + dy * ct) / ry;
        bool inside = false;
        if (kind == 0) inside = std::abs(u) <= 1 && std::abs(v) <= 1;
        else if (kind == 1) inside = u * u + v * v <= 1;
        else inside = v >= -1 && v <= 1 && std::abs(u) <= (1 - v) * 0.5;
        if (inside) img(x, y) = value;
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x < 2 || y < 2 || x >= width - 2 || y >= height - 2) img(x, y) = 0.05f;
    }
  }
  return to_gray8(img);
}

GrayImage make_noise_image(int width, int height, std::uint64_t seed) {
  GrayImage out(width, height);
  Stream rng(seed);
  for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(rng.next() >> 56);
  return out;
}

}  // namespace tislf::synth
