#pragma once

#include <filesystem>

#include "tislf/image.hpp"

namespace tislf {

/// Decodes a PNG (any bit depth / color type, alpha dropped) or binary PGM (P5)
/// into 8-bit RGB. Gray inputs come back with replicated channels.
/// Throws FrameDecodeError carrying the filename.
RgbImage read_rgb(const std::filesystem::path& path);

/// read_rgb followed by BT.601 luma conversion.
GrayImage read_gray(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace tislf
