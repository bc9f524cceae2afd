#include "tislf/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "tislf/errors.hpp"

namespace tislf {

void EstimationParams::validate() const {
  if (t_stand < 1) throw ConfigError("estimation.t_stand must be >= 1");
  if (t_lost < 0) throw ConfigError("estimation.t_lost must be >= 0");
  if (!(beta > 0)) throw ConfigError("estimation.beta must be > 0");
}

namespace {

struct Run {
  int start = 0;  // inclusive local indices
  int end = 0;
};

std::vector<Run> runs_of(const std::vector<bool>& v, bool value) {
  std::vector<Run> out;
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n;) {
    if (v[static_cast<std::size_t>(i)] != value) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && v[static_cast<std::size_t>(j + 1)] == value) ++j;
    out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

}  // namespace

std::vector<bool> bridge_gaps(const std::vector<bool>& presence, int t_lost) {
  std::vector<bool> out = presence;
  const int n = static_cast<int>(presence.size());
  for (const Run& r : runs_of(presence, false)) {
    if (r.start == 0 || r.end == n - 1) continue;
    if (r.end - r.start + 1 <= t_lost) {
      for (int i = r.start; i <= r.end; ++i) out[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

std::vector<bool> prune_short(const std::vector<bool>& presence, int t_stand) {
  std::vector<bool> out = presence;
  for (const Run& r : runs_of(presence, true)) {
    if (r.end - r.start + 1 < t_stand) {
      for (int i = r.start; i <= r.end; ++i) out[static_cast<std::size_t>(i)] = false;
    }
  }
  return out;
}

std::vector<bool> smooth_presence(const std::vector<bool>& presence, const EstimationParams& params) {
  return prune_short(bridge_gaps(presence, params.t_lost), params.t_stand);
}

GaussianStats fit_gaussian(std::span<const double> samples) {
  GaussianStats s;
  if (samples.empty()) return s;
  double sum = 0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(samples.size());
  double ss = 0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.var = std::max(kVarianceFloor, ss / static_cast<double>(samples.size()));
  return s;
}

double gaussian_log_likelihood(std::span<const double> samples, const GaussianStats& stats) {
  const double var = std::max(kVarianceFloor, stats.var);
  double ll = 0;
  for (double x : samples) ll += -0.5 * std::log(2 * std::numbers::pi * var) - (x - stats.mean) * (x - stats.mean) / (2 * var);
  return ll;
}

Assignment glrt_resolve(std::span<const double> disputed, const GaussianStats& a, const GaussianStats& b, double beta) {
  if (disputed.empty()) throw InternalError("glrt_resolve: no disputed samples");
  const double log_ratio = gaussian_log_likelihood(disputed, a) - gaussian_log_likelihood(disputed, b);
  return log_ratio > std::log(beta) ? Assignment::A : Assignment::B;
}

namespace {

bool any_in(const std::vector<bool>& v, int a, int b) {
  for (int i = a; i <= b; ++i) {
    if (v[static_cast<std::size_t>(i)]) return true;
  }
  return false;
}

std::optional<Box> box_over(const GroupTimeline& t, int a, int b) {
  std::optional<Box> out;
  for (int i = a; i <= b; ++i) {
    const auto& bx = t.box[static_cast<std::size_t>(i)];
    if (!bx) continue;
    out = out ? Box{std::min(out->x0, bx->x0), std::min(out->y0, bx->y0), std::max(out->x1, bx->x1),
                    std::max(out->y1, bx->y1)}
              : *bx;
  }
  return out;
}

// Probabilities on raw-candidate frames of `run` outside [wa, wb].
std::vector<double> accepted_samples(const GroupTimeline& t, Run run, int wa, int wb) {
  std::vector<double> out;
  for (int i = run.start; i <= run.end; ++i) {
    if (i >= wa && i <= wb) continue;
    if (t.presence[static_cast<std::size_t>(i)]) out.push_back(t.probability[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

EstimationResult estimate_intervals(const std::vector<GroupTimeline>& timelines, const EstimationParams& params,
                                    double effective_fps) {
  params.validate();
  if (!(effective_fps > 0)) throw ConfigError("effective_fps must be > 0");
  EstimationResult result;
  result.presence.resize(timelines.size());
  const int n_timelines = static_cast<int>(timelines.size());
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < n_timelines; ++t) {
    result.presence[static_cast<std::size_t>(t)] = smooth_presence(timelines[static_cast<std::size_t>(t)].presence, params);
  }

  // Handovers: A's run is still on when B's run starts, and A ends before B does.
  for (std::size_t ia = 0; ia < timelines.size(); ++ia) {
    for (std::size_t ib = 0; ib < timelines.size(); ++ib) {
      const GroupTimeline& A = timelines[ia];
      const GroupTimeline& B = timelines[ib];
      if (ia == ib || A.scene_id != B.scene_id || A.group == B.group) continue;
      if (A.presence.size() != B.presence.size()) continue;
      for (const Run& ra : runs_of(result.presence[ia], true)) {
        for (const Run& rb : runs_of(result.presence[ib], true)) {
          if (!(ra.start < rb.start && rb.start <= ra.end && ra.end < rb.end)) continue;
          const int wa = rb.start;
          const int wb = ra.end;
          if (!any_in(A.presence, wa, wb) || !any_in(B.presence, wa, wb)) continue;
          const auto box_a = box_over(A, wa, wb);
          const auto box_b = box_over(B, wa, wb);
          if (!box_a || !box_b || !box_a->overlaps(*box_b)) continue;
          const auto sa = accepted_samples(A, ra, wa, wb);
          const auto sb = accepted_samples(B, rb, wa, wb);
          if (static_cast<int>(sa.size()) < params.t_stand || static_cast<int>(sb.size()) < params.t_stand) continue;

          std::vector<double> disputed;
          for (int i = wa; i <= wb; ++i) {
            disputed.push_back(std::max(A.probability[static_cast<std::size_t>(i)], B.probability[static_cast<std::size_t>(i)]));
          }
          const GaussianStats ga = fit_gaussian(sa);
          const GaussianStats gb = fit_gaussian(sb);
          const Assignment who = glrt_resolve(disputed, ga, gb, params.beta);
          auto& loser = who == Assignment::A ? result.presence[ib] : result.presence[ia];
          for (int i = wa; i <= wb; ++i) loser[static_cast<std::size_t>(i)] = false;
          result.decisions.push_back({A.scene_id, A.group, B.group, A.first_frame + wa, A.first_frame + wb,
                                      who == Assignment::A ? A.group : B.group,
                                      gaussian_log_likelihood(disputed, ga) - gaussian_log_likelihood(disputed, gb)});
        }
      }
    }
  }

  for (std::size_t t = 0; t < timelines.size(); ++t) {
    // A lost dispute can leave a stub shorter than t_stand.
    result.presence[t] = prune_short(result.presence[t], params.t_stand);
    const GroupTimeline& tl = timelines[t];
    for (const Run& r : runs_of(result.presence[t], true)) {
      AppearanceInterval iv;
      iv.group = tl.group;
      iv.scene_id = tl.scene_id;
      iv.start_idx = tl.first_frame + r.start;
      iv.end_idx = tl.first_frame + r.end;
      iv.start_s = iv.start_idx / effective_fps;
      iv.end_s = iv.end_idx / effective_fps;
      double sum = 0;
      for (int i = r.start; i <= r.end; ++i) sum += tl.probability[static_cast<std::size_t>(i)];
      iv.mean_probability = sum / (r.end - r.start + 1);
      result.intervals.push_back(std::move(iv));
    }
  }
  std::sort(result.intervals.begin(), result.intervals.end(), [](const auto& x, const auto& y) {
    return std::tie(x.scene_id, x.group, x.start_idx) < std::tie(y.scene_id, y.group, y.start_idx);
  });
  return result;
}

}  // namespace tislf
