#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#include "tislf/errors.hpp"
#include "tislf/features.hpp"
#include "tislf/kernels.hpp"

namespace tislf {

namespace {

constexpr double kAssumedInputBlur = 0.5;
constexpr int kBorder = 5;
constexpr int kMaxRefineSteps = 5;
constexpr int kMinOctaveSide = 16;

constexpr int kOrientationBins = 36;
constexpr double kOrientationSigma = 1.5;
constexpr double kOrientationRadius = 3.0 * kOrientationSigma;
constexpr double kOrientationPeakRatio = 0.8;

constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScale = 3.0;
constexpr float kDescClamp = 0.2f;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Octave {
  std::vector<FloatImage> gauss;                // scales + 3 levels
  std::vector<FloatImage> dog;                  // scales + 2 levels
  std::vector<kernels::GradientField> gradient; // indexed by gauss level; filled for 1..scales
};

struct Extremum {
  int octave = 0;
  int layer = 0;
  int col = 0;
  int row = 0;
  float sub_layer = 0;
  float x_oct = 0;
  float y_oct = 0;
  float response = 0;
};

struct Oriented {
  Extremum ext;
  float orientation = 0;
};

int octave_count(int width, int height, int requested) {
  const int side = std::min(width, height);
  int count = 1;
  while (count < requested && (side >> count) >= kMinOctaveSide) ++count;
  return count;
}

std::vector<Octave> build_pyramid(const GrayImage& image, const FeatureParams& p) {
  const int s = p.scales_per_octave;
  const int levels = s + 3;
  const double k = std::pow(2.0, 1.0 / s);

  std::vector<double> step(static_cast<std::size_t>(levels), 0.0);
  for (int i = 1; i < levels; ++i) {
    const double prev = p.initial_sigma * std::pow(k, i - 1);
    const double total = prev * k;
    step[static_cast<std::size_t>(i)] = std::sqrt(total * total - prev * prev);
  }

  const double base_sigma =
      std::sqrt(std::max(p.initial_sigma * p.initial_sigma - kAssumedInputBlur * kAssumedInputBlur, 0.01));
  const int n_oct = octave_count(image.width(), image.height(), p.octaves);

  std::vector<Octave> pyr(static_cast<std::size_t>(n_oct));
  for (int o = 0; o < n_oct; ++o) {
    Octave& oct = pyr[static_cast<std::size_t>(o)];
    oct.gauss.reserve(static_cast<std::size_t>(levels));
    if (o == 0) {
      oct.gauss.push_back(kernels::gaussian_blur(to_float(image), base_sigma));
    } else {
      // Level `s` of the previous octave has twice the base sigma.
      oct.gauss.push_back(kernels::decimate(pyr[static_cast<std::size_t>(o - 1)].gauss[static_cast<std::size_t>(s)]));
    }
    for (int i = 1; i < levels; ++i) {
      oct.gauss.push_back(kernels::gaussian_blur(oct.gauss.back(), step[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i + 1 < levels; ++i) {
      oct.dog.push_back(kernels::subtract(oct.gauss[static_cast<std::size_t>(i + 1)], oct.gauss[static_cast<std::size_t>(i)]));
    }
    oct.gradient.resize(static_cast<std::size_t>(levels));
    for (int i = 1; i <= s; ++i) {
      oct.gradient[static_cast<std::size_t>(i)] = kernels::gradient_field(oct.gauss[static_cast<std::size_t>(i)]);
    }
  }
  return pyr;
}

bool is_local_extremum(const std::vector<FloatImage>& dog, int layer, int c, int r, float v) {
  for (int l = layer - 1; l <= layer + 1; ++l) {
    const FloatImage& img = dog[static_cast<std::size_t>(l)];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dx == 0 && dy == 0) continue;
        const float n = img(c + dx, r + dy);
        if (v > 0 ? n > v : n < v) return false;
      }
    }
  }
  return true;
}

// Fits a 3-D quadratic around the sample and walks toward the true extremum.
bool refine(const Octave& oct, const FeatureParams& p, Extremum& e) {
  const int s = p.scales_per_octave;
  int layer = e.layer;
  int c = e.col;
  int r = e.row;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();

  int step = 0;
  for (; step < kMaxRefineSteps; ++step) {
    const FloatImage& prev = oct.dog[static_cast<std::size_t>(layer - 1)];
    const FloatImage& cur = oct.dog[static_cast<std::size_t>(layer)];
    const FloatImage& next = oct.dog[static_cast<std::size_t>(layer + 1)];
    const double v2 = 2.0 * cur(c, r);

    grad << (cur(c + 1, r) - cur(c - 1, r)) * 0.5, (cur(c, r + 1) - cur(c, r - 1)) * 0.5,
        (next(c, r) - prev(c, r)) * 0.5;

    const double dxx = cur(c + 1, r) + cur(c - 1, r) - v2;
    const double dyy = cur(c, r + 1) + cur(c, r - 1) - v2;
    const double dss = next(c, r) + prev(c, r) - v2;
    const double dxy = (cur(c + 1, r + 1) - cur(c - 1, r + 1) - cur(c + 1, r - 1) + cur(c - 1, r - 1)) * 0.25;
    const double dxs = (next(c + 1, r) - next(c - 1, r) - prev(c + 1, r) + prev(c - 1, r)) * 0.25;
    const double dys = (next(c, r + 1) - next(c, r - 1) - prev(c, r + 1) + prev(c, r - 1)) * 0.25;

    Eigen::Matrix3d hess;
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    const double det = hess.determinant();
    if (std::abs(det) < 1e-18) return false;
    offset = -hess.inverse() * grad;

    if (std::abs(offset[0]) < 0.5 && std::abs(offset[1]) < 0.5 && std::abs(offset[2]) < 0.5) break;
    if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 1e6) return false;

    c += static_cast<int>(std::lround(offset[0]));
    r += static_cast<int>(std::lround(offset[1]));
    layer += static_cast<int>(std::lround(offset[2]));
    if (layer < 1 || layer > s || c < kBorder || c >= cur.width() - kBorder || r < kBorder ||
        r >= cur.height() - kBorder) {
      return false;
    }
  }
  if (step >= kMaxRefineSteps) return false;

  const FloatImage& cur = oct.dog[static_cast<std::size_t>(layer)];
  const double contrast = cur(c, r) + 0.5 * grad.dot(offset);
  // Threshold is specified per octave, shared by its scale layers.
  if (std::abs(contrast) * s < p.contrast_thresh) return false;

  const double dxx = cur(c + 1, r) + cur(c - 1, r) - 2.0 * cur(c, r);
  const double dyy = cur(c, r + 1) + cur(c, r - 1) - 2.0 * cur(c, r);
  const double dxy = (cur(c + 1, r + 1) - cur(c - 1, r + 1) - cur(c + 1, r - 1) + cur(c - 1, r - 1)) * 0.25;
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double edge = p.edge_thresh;
  if (det <= 0 || tr * tr * edge >= (edge + 1) * (edge + 1) * det) return false;

  e.layer = layer;
  e.col = c;
  e.row = r;
  e.sub_layer = static_cast<float>(offset[2]);
  e.x_oct = static_cast<float>(c + offset[0]);
  e.y_oct = static_cast<float>(r + offset[1]);
  e.response = static_cast<float>(std::abs(contrast));
  return true;
}

std::vector<Extremum> find_extrema(const std::vector<Octave>& pyr, const FeatureParams& p) {
  const int s = p.scales_per_octave;
  const float threshold = static_cast<float>(0.5 * p.contrast_thresh / s);

  struct Task {
    int octave;
    int layer;
  };
  std::vector<Task> tasks;
  for (int o = 0; o < static_cast<int>(pyr.size()); ++o) {
    for (int l = 1; l <= s; ++l) tasks.push_back({o, l});
  }
  std::vector<std::vector<Extremum>> found(tasks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks.size()); ++t) {
    const Task task = tasks[static_cast<std::size_t>(t)];
    const Octave& oct = pyr[static_cast<std::size_t>(task.octave)];
    const FloatImage& cur = oct.dog[static_cast<std::size_t>(task.layer)];
    auto& out = found[static_cast<std::size_t>(t)];
    for (int r = kBorder; r < cur.height() - kBorder; ++r) {
      for (int c = kBorder; c < cur.width() - kBorder; ++c) {
        const float v = cur(c, r);
        if (std::abs(v) <= threshold) continue;
        if (!is_local_extremum(oct.dog, task.layer, c, r, v)) continue;
        Extremum e;
        e.octave = task.octave;
        e.layer = task.layer;
        e.col = c;
        e.row = r;
        if (refine(oct, p, e)) out.push_back(e);
      }
    }
  }

  std::vector<Extremum> all;
  for (auto& f : found) all.insert(all.end(), f.begin(), f.end());
  return all;
}

double octave_sigma(const FeatureParams& p, const Extremum& e) {
  return p.initial_sigma * std::pow(2.0, (e.layer + e.sub_layer) / p.scales_per_octave);
}

std::vector<float> dominant_orientations(const Octave& oct, const FeatureParams& p, const Extremum& e) {
  const kernels::GradientField& g = oct.gradient[static_cast<std::size_t>(e.layer)];
  const double sigma = kOrientationSigma * octave_sigma(p, e);
  const int radius = static_cast<int>(std::lround(kOrientationRadius * octave_sigma(p, e)));
  const double denom = -1.0 / (2.0 * sigma * sigma);
  const int w = g.magnitude.width();
  const int h = g.magnitude.height();

  std::array<double, kOrientationBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = e.row + dy;
    if (y <= 0 || y >= h - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = e.col + dx;
      if (x <= 0 || x >= w - 1) continue;
      const double weight = std::exp((dx * dx + dy * dy) * denom);
      int bin = static_cast<int>(std::lround(g.angle(x, y) * kOrientationBins / kTwoPi));
      bin = ((bin % kOrientationBins) + kOrientationBins) % kOrientationBins;
      hist[static_cast<std::size_t>(bin)] += weight * g.magnitude(x, y);
    }
  }

  std::array<double, kOrientationBins> smooth{};
  for (int i = 0; i < kOrientationBins; ++i) {
    auto at = [&](int j) { return hist[static_cast<std::size_t>((j + kOrientationBins) % kOrientationBins)]; };
    smooth[static_cast<std::size_t>(i)] =
        (at(i - 2) + at(i + 2)) / 16.0 + (at(i - 1) + at(i + 1)) * 4.0 / 16.0 + at(i) * 6.0 / 16.0;
  }
  const double peak = *std::max_element(smooth.begin(), smooth.end());

  std::vector<float> out;
  if (peak <= 0) return out;
  for (int i = 0; i < kOrientationBins; ++i) {
    const double l = smooth[static_cast<std::size_t>((i - 1 + kOrientationBins) % kOrientationBins)];
    const double c = smooth[static_cast<std::size_t>(i)];
    const double r = smooth[static_cast<std::size_t>((i + 1) % kOrientationBins)];
    if (c > l && c > r && c >= kOrientationPeakRatio * peak) {
      double bin = i + 0.5 * (l - r) / (l - 2.0 * c + r);
      if (bin < 0) bin += kOrientationBins;
      if (bin >= kOrientationBins) bin -= kOrientationBins;
      auto angle = static_cast<float>(bin * kTwoPi / kOrientationBins);
      if (angle >= static_cast<float>(kTwoPi) || angle < 0) angle = 0;
      out.push_back(angle);
    }
  }
  return out;
}

// Returns false for a zero-gradient patch (degenerate descriptor).
bool describe(const Octave& oct, const FeatureParams& p, const Extremum& e, float orientation, Descriptor& out) {
  const kernels::GradientField& g = oct.gradient[static_cast<std::size_t>(e.layer)];
  const int w = g.magnitude.width();
  const int h = g.magnitude.height();
  const double hist_width = kDescScale * octave_sigma(p, e);
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(static_cast<double>(w * w + h * h))));
  const float cos_t = static_cast<float>(std::cos(orientation) / hist_width);
  const float sin_t = static_cast<float>(std::sin(orientation) / hist_width);
  const float exp_scale = -1.0f / (kDescWidth * kDescWidth * 0.5f);
  const float bins_per_rad = static_cast<float>(kDescBins / kTwoPi);
  const float half = kDescWidth / 2.0f - 0.5f;

  constexpr int kSide = kDescWidth + 2;
  std::array<float, kSide * kSide * kDescBins> hist{};

  for (int i = -radius; i <= radius; ++i) {
    const int y = e.row + i;
    if (y <= 0 || y >= h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = e.col + j;
      if (x <= 0 || x >= w - 1) continue;
      // Offsets expressed in the keypoint frame, in histogram-cell units.
      const float x_rot = j * cos_t + i * sin_t;
      const float y_rot = -j * sin_t + i * cos_t;
      const float rbin = y_rot + half;
      const float cbin = x_rot + half;
      if (rbin <= -1 || rbin >= kDescWidth || cbin <= -1 || cbin >= kDescWidth) continue;

      float rel = g.angle(x, y) - orientation;
      if (rel < 0) rel += static_cast<float>(kTwoPi);
      if (rel >= static_cast<float>(kTwoPi)) rel -= static_cast<float>(kTwoPi);
      const float obin = rel * bins_per_rad;
      const float mag = g.magnitude(x, y) * std::exp((x_rot * x_rot + y_rot * y_rot) * exp_scale);

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const float dr = rbin - r0;
      const float dc = cbin - c0;
      const float dob = obin - o0;

      for (int a = 0; a < 2; ++a) {
        const float wr = a ? dr : 1 - dr;
        for (int b = 0; b < 2; ++b) {
          const float wc = b ? dc : 1 - dc;
          for (int o = 0; o < 2; ++o) {
            const float wo = o ? dob : 1 - dob;
            const int ob = (o0 + o) % kDescBins;
            hist[static_cast<std::size_t>(((r0 + 1 + a) * kSide + (c0 + 1 + b)) * kDescBins + ob)] +=
                mag * wr * wc * wo;
          }
        }
      }
    }
  }

  for (int r = 0; r < kDescWidth; ++r) {
    for (int c = 0; c < kDescWidth; ++c) {
      for (int o = 0; o < kDescBins; ++o) {
        out[static_cast<std::size_t>((r * kDescWidth + c) * kDescBins + o)] =
            hist[static_cast<std::size_t>(((r + 1) * kSide + (c + 1)) * kDescBins + o)];
      }
    }
  }

  auto norm_of = [&] {
    double n = 0;
    for (float v : out) n += static_cast<double>(v) * v;
    return std::sqrt(n);
  };
  double norm = norm_of();
  if (!(norm > 0) || !std::isfinite(norm)) return false;
  const auto cap = static_cast<float>(kDescClamp * norm);
  for (float& v : out) v = std::min(v, cap);
  norm = norm_of();
  for (float& v : out) v = static_cast<float>(v / norm);
  return true;
}

// Total order so sorting is reproducible: (scale desc, response desc, y, x, orientation).
bool keypoint_order(const Keypoint& a, const Keypoint& b) {
  return std::tuple(-a.scale, -a.response, a.y, a.x, a.orientation) <
         std::tuple(-b.scale, -b.response, b.y, b.x, b.orientation);
}

}  // namespace

SiftDetector::SiftDetector(FeatureParams params) : params_(params) {}

FeatureSet SiftDetector::detect(const GrayImage& image) const { return detect_and_describe(image, params_); }

FeatureSet detect_and_describe(const GrayImage& image, const FeatureParams& p) {
  if (image.width() < 16 || image.height() < 16) {
    throw ImageTooSmall("feature detection needs at least 16x16 pixels, got " + std::to_string(image.width()) +
                        "x" + std::to_string(image.height()));
  }

  const auto pyr = build_pyramid(image, p);
  const auto extrema = find_extrema(pyr, p);

  std::vector<std::vector<float>> orientations(extrema.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(extrema.size()); ++i) {
    const Extremum& e = extrema[static_cast<std::size_t>(i)];
    orientations[static_cast<std::size_t>(i)] = dominant_orientations(pyr[static_cast<std::size_t>(e.octave)], p, e);
  }

  std::vector<Oriented> oriented;
  std::vector<Keypoint> kps;
  for (std::size_t i = 0; i < extrema.size(); ++i) {
    const Extremum& e = extrema[i];
    const float mult = static_cast<float>(1 << e.octave);
    for (float ori : orientations[i]) {
      Keypoint kp;
      kp.x = e.x_oct * mult;
      kp.y = e.y_oct * mult;
      kp.scale = static_cast<float>(octave_sigma(p, e) * mult);
      kp.orientation = ori;
      kp.response = e.response;
      if (kp.x < 0 || kp.y < 0 || kp.x >= image.width() || kp.y >= image.height()) continue;
      oriented.push_back({e, ori});
      kps.push_back(kp);
    }
  }

  // Strongest responses survive the cap.
  std::vector<std::size_t> order(kps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (kps[a].response != kps[b].response) return kps[a].response > kps[b].response;
    return keypoint_order(kps[a], kps[b]);
  });
  if (p.max_keypoints > 0 && order.size() > static_cast<std::size_t>(p.max_keypoints)) {
    order.resize(static_cast<std::size_t>(p.max_keypoints));
  }

  std::vector<Descriptor> descs(order.size());
  std::vector<char> ok(order.size(), 0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(order.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Oriented& o = oriented[order[k]];
    ok[k] = describe(pyr[static_cast<std::size_t>(o.ext.octave)], p, o.ext, o.orientation, descs[k]) ? 1 : 0;
  }

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (ok[k]) kept.push_back(k);
  }
  std::sort(kept.begin(), kept.end(),
            [&](std::size_t a, std::size_t b) { return keypoint_order(kps[order[a]], kps[order[b]]); });

  FeatureSet fs;
  fs.width = image.width();
  fs.height = image.height();
  std::set<Descriptor> seen;
  for (std::size_t k : kept) {
    if (!seen.insert(descs[k]).second) continue;  // identical descriptors are indistinguishable to the matcher
    fs.keypoints.push_back(kps[order[k]]);
    fs.descriptors.push_back(descs[k]);
  }
  return fs;
}

void write_feature_dump(std::ostream& out, const FeatureSet& features) {
  const auto old_prec = out.precision(9);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Keypoint& k = features.keypoints[i];
    out << k.x << ' ' << k.y << ' ' << k.scale << ' ' << k.orientation << ' ' << k.response;
    for (float v : features.descriptors[i]) out << ' ' << v;
    out << '\n';
  }
  out.precision(old_prec);
}

}  // namespace tislf
