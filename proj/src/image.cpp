#include "tislf/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tislf/errors.hpp"

namespace tislf {

GrayImage to_grayscale(const RgbImage& rgb) {
  GrayImage out(rgb.width, rgb.height);
  const std::uint8_t* src = rgb.rgb.data();
  for (std::size_t i = 0; i < out.size(); ++i, src += 3) {
    out.pixels()[i] = luma(src[0], src[1], src[2]);
  }
  return out;
}

namespace {

// Overlap (in units of 1/out) of source cell `s` with output cell `o` when `in`
// source cells are mapped onto `out` output cells. Output cell o spans
// [o*in, (o+1)*in), source cell s spans [s*out, (s+1)*out).
struct Tap {
  int src;
  std::uint64_t weight;
};

std::vector<std::vector<Tap>> box_taps(int in, int out) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
  const auto in64 = static_cast<std::uint64_t>(in);
  const auto out64 = static_cast<std::uint64_t>(out);
  for (int o = 0; o < out; ++o) {
    const std::uint64_t lo = static_cast<std::uint64_t>(o) * in64;
    const std::uint64_t hi = lo + in64;
    const auto first = static_cast<int>(lo / out64);
    const auto last = static_cast<int>((hi - 1) / out64);
    for (int s = first; s <= last; ++s) {
      const std::uint64_t s_lo = static_cast<std::uint64_t>(s) * out64;
      const std::uint64_t s_hi = s_lo + out64;
      const std::uint64_t w = std::min(hi, s_hi) - std::max(lo, s_lo);
      if (w > 0) taps[static_cast<std::size_t>(o)].push_back({s, w});
    }
  }
  return taps;
}

}  // namespace

GrayImage downsample(const GrayImage& src, int out_w, int out_h) {
  if (out_w > src.width() || out_h > src.height()) {
    throw InvalidResizeError("downsample cannot enlarge " + std::to_string(src.width()) + "x" +
                             std::to_string(src.height()) + " to " + std::to_string(out_w) + "x" +
                             std::to_string(out_h));
  }
  if (out_w < 1 || out_h < 1) throw InvalidResizeError("downsample target must be positive");
  if (out_w == src.width() && out_h == src.height()) return src;

  const auto xt = box_taps(src.width(), out_w);
  const auto yt = box_taps(src.height(), out_h);

  // Horizontal pass into exact integer sums, then vertical.
  std::vector<std::uint64_t> horiz(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(src.height()));
  for (int y = 0; y < src.height(); ++y) {
    const auto row = src.row(y);
    for (int ox = 0; ox < out_w; ++ox) {
      std::uint64_t acc = 0;
      for (const Tap& t : xt[static_cast<std::size_t>(ox)]) acc += t.weight * row[static_cast<std::size_t>(t.src)];
      horiz[static_cast<std::size_t>(y) * out_w + ox] = acc;
    }
  }

  GrayImage out(out_w, out_h);
  const std::uint64_t denom = static_cast<std::uint64_t>(src.width()) * static_cast<std::uint64_t>(src.height());
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      std::uint64_t acc = 0;
      for (const Tap& t : yt[static_cast<std::size_t>(oy)]) {
        acc += t.weight * horiz[static_cast<std::size_t>(t.src) * out_w + ox];
      }
      out(ox, oy) = static_cast<std::uint8_t>(std::min<std::uint64_t>(255, (acc + denom / 2) / denom));
    }
  }
  return out;
}

std::pair<int, int> fit_long_side(int width, int height, int long_side) {
  const int longer = std::max(width, height);
  if (long_side <= 0 || longer <= long_side) return {width, height};
  const double s = static_cast<double>(long_side) / longer;
  int w = width >= height ? long_side : static_cast<int>(std::lround(width * s));
  int h = height > width ? long_side : static_cast<int>(std::lround(height * s));
  return {std::max(w, 8), std::max(h, 8)};
}

FloatImage to_float(const GrayImage& src) {
  FloatImage out(src.width(), src.height());
  for (std::size_t i = 0; i < src.size(); ++i) out.pixels()[i] = src.pixels()[i] / 255.0f;
  return out;
}

GrayImage to_gray8(const FloatImage& src) {
  GrayImage out(src.width(), src.height());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float v = std::clamp(src.pixels()[i], 0.0f, 1.0f);
    out.pixels()[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

}  // namespace tislf
