#include "tislf/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "tislf/kernels.hpp"

namespace tislf {

std::optional<Denominator> parse_denominator(std::string_view text) {
  if (text == "second") return Denominator::Second;
  if (text == "min") return Denominator::Min;
  if (text == "union") return Denominator::Union;
  return std::nullopt;
}

std::string_view to_string(Denominator d) {
  switch (d) {
    case Denominator::Second: return "second";
    case Denominator::Min: return "min";
    case Denominator::Union: return "union";
  }
  return "second";
}

namespace {

std::vector<Match> ratio_filter(const std::vector<kernels::TwoNearest>& nn, std::size_t n_train, double ratio,
                                double single_neighbor_max) {
  std::vector<Match> best_for_train(n_train, Match{-1, -1, 0});
  for (std::size_t i = 0; i < nn.size(); ++i) {
    const auto& r = nn[i];
    if (r.best < 0) continue;
    const double d1 = std::sqrt(static_cast<double>(r.best_sq));
    bool accept = false;
    if (n_train == 1) {
      accept = d1 < single_neighbor_max;
    } else {
      const double d2 = std::sqrt(static_cast<double>(r.second_sq));
      accept = d2 > 0 && d1 < ratio * d2;
    }
    if (!accept) continue;
    Match& slot = best_for_train[static_cast<std::size_t>(r.best)];
    // Queries arrive in increasing order, so strict < keeps the lower index on ties.
    if (slot.query < 0 || d1 < slot.distance) slot = Match{static_cast<int>(i), r.best, static_cast<float>(d1)};
  }
  std::vector<Match> out;
  for (const Match& m : best_for_train) {
    if (m.query >= 0) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const Match& x, const Match& y) { return x.query < y.query; });
  return out;
}

}  // namespace

std::vector<Match> match_descriptors(const FeatureSet& a, const FeatureSet& b, double ratio,
                                     double single_neighbor_max) {
  if (a.empty() || b.empty()) return {};
  const auto nn = kernels::two_nearest(a.descriptor_data(), b.descriptor_data(), kDescriptorSize);
  return ratio_filter(nn, b.size(), ratio, single_neighbor_max);
}

std::vector<Match> match_descriptors_serial(const FeatureSet& a, const FeatureSet& b, double ratio,
                                            double single_neighbor_max) {
  if (a.empty() || b.empty()) return {};
  const auto nn = kernels::two_nearest_serial(a.descriptor_data(), b.descriptor_data(), kDescriptorSize);
  return ratio_filter(nn, b.size(), ratio, single_neighbor_max);
}

namespace {

std::size_t distinct_positions(const std::vector<Point2>& pts) {
  std::set<std::pair<double, double>> seen;
  for (const auto& p : pts) seen.emplace(p.x, p.y);
  return seen.size();
}

std::vector<std::size_t> consensus(const Homography& h, const std::vector<Point2>& src,
                                   const std::vector<Point2>& dst, double eps) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (transfer_error(h, src[i], dst[i]) < eps) idx.push_back(i);
  }
  return idx;
}

std::size_t required_iterations(std::size_t inliers, std::size_t total, double confidence, std::size_t cap) {
  const double w = static_cast<double>(inliers) / static_cast<double>(total);
  const double p_good = std::pow(w, 4);
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n >= static_cast<double>(cap)) return cap;
  return static_cast<std::size_t>(std::ceil(n));
}

}  // namespace

MatchResult ransac_verify(const std::vector<Match>& candidates, const FeatureSet& a, const FeatureSet& b,
                          const MatcherParams& params) {
  MatchResult result;
  result.n_query_keypoints = a.size();
  result.n_train_keypoints = b.size();

  std::vector<Point2> src, dst;
  src.reserve(candidates.size());
  dst.reserve(candidates.size());
  for (const Match& m : candidates) {
    const Keypoint& ka = a.keypoints[static_cast<std::size_t>(m.query)];
    const Keypoint& kb = b.keypoints[static_cast<std::size_t>(m.train)];
    src.push_back({ka.x, ka.y});
    dst.push_back({kb.x, kb.y});
  }

  if (candidates.size() < 4 || distinct_positions(src) < 4) {
    result.inliers = candidates;
    return result;
  }

  const std::size_t n = candidates.size();
  const auto cap = static_cast<std::size_t>(std::max(1, params.max_iters));
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::vector<std::size_t> best;
  std::optional<Homography> best_model;
  std::size_t needed = cap;
  std::size_t draws = 0;
  const std::size_t max_draws = cap * 10;

  for (std::size_t it = 0; it < needed && draws < max_draws;) {
    ++draws;
    std::array<std::size_t, 4> s{};
    for (std::size_t k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        s[k] = pick(rng);
        fresh = std::find(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s[k]) ==
                s.begin() + static_cast<std::ptrdiff_t>(k);
      }
    }
    const std::array<Point2, 4> qs{src[s[0]], src[s[1]], src[s[2]], src[s[3]]};
    const std::array<Point2, 4> qd{dst[s[0]], dst[s[1]], dst[s[2]], dst[s[3]]};
    // Resample without spending an iteration.
    if (degenerate_quad(qs) || degenerate_quad(qd) || !orientation_consistent(qs, qd)) continue;
    ++it;
    const auto h = fit_homography_minimal(qs, qd);
    if (!h) continue;
    auto members = consensus(*h, src, dst, params.epsilon_px);
    if (members.size() > best.size()) {
      best = std::move(members);
      best_model = h;
      needed = std::min(cap, required_iterations(best.size(), n, params.confidence, cap));
    }
  }

  if (best.size() < 4) return result;

  std::vector<Point2> in_src, in_dst;
  for (std::size_t i : best) {
    in_src.push_back(src[i]);
    in_dst.push_back(dst[i]);
  }
  if (const auto refit = fit_homography(in_src, in_dst)) {
    auto members = consensus(*refit, src, dst, params.epsilon_px);
    if (members.size() >= best.size()) {
      best = std::move(members);
      best_model = refit;
    }
  }

  for (std::size_t i : best) result.inliers.push_back(candidates[i]);
  result.model = best_model;
  return result;
}

MatchScore match_probability(const FeatureSet& a, const FeatureSet& b, const MatcherParams& params,
                             Denominator denominator) {
  MatchScore score;
  score.result = ransac_verify(match_descriptors(a, b, params.ratio, params.single_neighbor_max), a, b, params);
  const std::size_t matches = score.result.inliers.size();
  std::size_t denom = 0;
  switch (denominator) {
    case Denominator::Second: denom = b.size(); break;
    case Denominator::Min: denom = std::min(a.size(), b.size()); break;
    case Denominator::Union: denom = a.size() + b.size() - matches; break;
  }
  if (denom == 0) {
    score.degenerate = true;
    return score;
  }
  score.probability = std::min(1.0, static_cast<double>(matches) / static_cast<double>(denom));
  return score;
}

}  // namespace tislf
