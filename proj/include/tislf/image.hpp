#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tislf {

/// Dense row-major single-channel image.
template <typename T>
class Image {
public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t size() const noexcept { return pixels_.size(); }

  T& operator()(int x, int y) noexcept { return pixels_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return pixels_[index(x, y)]; }

  std::span<T> row(int y) noexcept {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const noexcept {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::vector<T>& pixels() noexcept { return pixels_; }
  const std::vector<T>& pixels() const noexcept { return pixels_; }
  T* data() noexcept { return pixels_.data(); }
  const T* data() const noexcept { return pixels_.data(); }

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

/// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// BT.601 luma, round-half-up, exact in integer arithmetic.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage to_grayscale(const RgbImage& rgb);

/// Area-averaging resample to exactly (out_w, out_h). Throws InvalidResizeError
/// on upsampling or a non-positive output side. Ingestion keeps both sides >= 8.
GrayImage downsample(const GrayImage& src, int out_w, int out_h);

/// Dimensions whose longer side is `long_side`, aspect preserved. Never upsamples.
std::pair<int, int> fit_long_side(int width, int height, int long_side);

FloatImage to_float(const GrayImage& src);
GrayImage to_gray8(const FloatImage& src);

}  // namespace tislf
