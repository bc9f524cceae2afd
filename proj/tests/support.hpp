#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tislf/features.hpp"
#include "tislf/matcher.hpp"

namespace testing_support {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tislf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Keypoints at the given positions with unit random descriptors.
inline tislf::FeatureSet feature_set_at(const std::vector<tislf::Point2>& pts, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.f, 1.f);
  tislf::FeatureSet fs;
  for (const auto& p : pts) {
    fs.keypoints.push_back({static_cast<float>(p.x), static_cast<float>(p.y), 2.f, 0.f, 1.f});
    tislf::Descriptor d;
    double norm = 0;
    for (float& v : d) {
      v = std::abs(n(rng));
      norm += v * v;
    }
    for (float& v : d) v = static_cast<float>(v / std::sqrt(norm));
    fs.descriptors.push_back(d);
  }
  return fs;
}

/// `n_true` correspondences under `h` followed by `n_false` uniformly random pairs,
/// all inside a width x height frame. Candidate i pairs a-point i with b-point i.
struct SyntheticCorrespondences {
  tislf::FeatureSet a;
  tislf::FeatureSet b;
  std::vector<tislf::Match> candidates;
  int n_true = 0;
};

inline SyntheticCorrespondences synthetic_correspondences(const tislf::Homography& h, int n_true, int n_false,
                                                          std::uint64_t seed, double width = 640,
                                                          double height = 480) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(20, width - 20), uy(20, height - 20);
  std::vector<tislf::Point2> pa, pb;
  for (int i = 0; i < n_true; ++i) {
    const tislf::Point2 p{ux(rng), uy(rng)};
    pa.push_back(p);
    pb.push_back(tislf::apply(h, p));
  }
  for (int i = 0; i < n_false; ++i) {
    pa.push_back({ux(rng), uy(rng)});
    pb.push_back({ux(rng), uy(rng)});
  }
  SyntheticCorrespondences out;
  out.a = feature_set_at(pa, rng);
  out.b = feature_set_at(pb, rng);
  out.n_true = n_true;
  for (int i = 0; i < n_true + n_false; ++i) out.candidates.push_back({i, i, 0.1f});
  return out;
}

}  // namespace testing_support
