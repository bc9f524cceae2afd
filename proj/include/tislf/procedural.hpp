#pragma once

#include <cstdint>

#include "tislf/image.hpp"

namespace tislf::synth {

/// splitmix64 finalizer; the building block for all seeded procedural content.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(seed ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

struct NoiseParams {
  int octaves = 5;
  double base_period = 64.0;  // lattice spacing of the coarsest octave, pixels
  double persistence = 0.6;   // amplitude ratio between successive octaves
};

/// Multi-octave value noise in [0,1], sampled at (x + offset_x, y + offset_y).
/// Sampling with shifted offsets gives a sub-pixel pan of the same texture.
FloatImage value_noise(int width, int height, std::uint64_t seed, const NoiseParams& params, double offset_x = 0,
                       double offset_y = 0);

/// Stretches values to span [lo, hi].
void normalize_range(FloatImage& image, float lo = 0.0f, float hi = 1.0f);

/// A target-like picture: textured field with random filled shapes and a frame.
GrayImage make_target_image(int width, int height, std::uint64_t seed);

/// Unstructured uniform noise, useful as an uncorrelated negative.
GrayImage make_noise_image(int width, int height, std::uint64_t seed);

}  // namespace tislf::synth
