#include "tislf/frame_io.hpp"

#include <algorithm>
#include <exception>
#include <optional>
#include <regex>
#include <string>

#include "tislf/errors.hpp"
#include "tislf/image_io.hpp"

namespace tislf {

namespace {

struct FrameFile {
  std::filesystem::path path;
  std::string name;
  unsigned long long number;
};

std::optional<unsigned long long> numeric_stem(const std::string& name) {
  static const std::regex pattern(R"(^.*?(\d+)\.(png|PNG|pgm|PGM)$)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  try {
    return std::stoull(m[1].str());
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

std::vector<FrameFile> scan(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw InputNotFound("frames directory not found: '" + dir.string() + "'");
  }
  std::vector<FrameFile> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (auto n = numeric_stem(name)) files.push_back({entry.path(), name, *n});
  }
  if (files.empty()) throw EmptySequence("no frame images in '" + dir.string() + "'");
  std::sort(files.begin(), files.end(), [](const FrameFile& a, const FrameFile& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].number <= files[i - 1].number) {
      throw SequenceOrderError("frame numbering is not strictly increasing at '" + files[i].name + "' (after '" +
                               files[i - 1].name + "')");
    }
  }
  return files;
}

}  // namespace

FramePair make_frame_pair(GrayImage image, std::size_t index, const IngestConfig& config) {
  const double ts = static_cast<double>(index) / config.effective_fps;
  const auto [sw, sh] = fit_long_side(image.width(), image.height(), config.downsample_long_side);
  FramePair pair;
  pair.small = GrayFrame{index, ts, downsample(image, sw, sh)};
  pair.full = GrayFrame{index, ts, std::move(image)};
  return pair;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (auto& f : scan(dir)) out.push_back(std::move(f.path));
  return out;
}

std::vector<FramePair> load_sequence(const std::filesystem::path& dir, const IngestConfig& config) {
  const auto files = scan(dir);
  const auto n = static_cast<std::ptrdiff_t>(files.size());
  std::vector<FramePair> frames(files.size());
  std::vector<std::exception_ptr> errors(files.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      frames[k] = make_frame_pair(read_gray(files[k].path), k, config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  // Report the first failure in sequence order regardless of thread timing.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return frames;
}

}  // namespace tislf
