#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "tislf/image.hpp"

namespace tislf {

struct GrayFrame {
  std::size_t index = 0;   // 0-based ordinal within the sequence
  double timestamp_s = 0;  // index / effective_fps
  GrayImage image;

  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }
};

/// Full-resolution frame and its downsampled copy; both share index and timestamp.
struct FramePair {
  GrayFrame full;
  GrayFrame small;
};

struct IngestConfig {
  std::filesystem::path frames_dir;
  double effective_fps = 1.0;
  int downsample_long_side = 320;
};

/// Builds the pair for one already-decoded frame.
FramePair make_frame_pair(GrayImage image, std::size_t index, const IngestConfig& config);

/// Loads `*<digits>.png` / `*<digits>.pgm` from `dir` in ascending numeric order.
///
/// File names are sorted lexicographically; their numeric stems must then be
/// strictly increasing (zero-padding makes the two orders agree), otherwise
/// SequenceOrderError. Missing directory -> InputNotFound, no matching files ->
/// EmptySequence, bad image -> FrameDecodeError.
std::vector<FramePair> load_sequence(const std::filesystem::path& dir, const IngestConfig& config);

/// Matching frame files in load order, without decoding them.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace tislf
