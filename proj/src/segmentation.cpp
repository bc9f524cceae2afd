#include "tislf/segmentation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "tislf/errors.hpp"

namespace tislf {

void CusumParams::validate() const {
  if (!(alpha > 0)) throw ConfigError("cusum.alpha must be > 0");
  if (warmup < 2) throw ConfigError("cusum.warmup must be >= 2");
  if (delta && !(*delta > 0 && *delta <= 1)) throw ConfigError("cusum.delta must lie in (0, 1]");
  if (!(rearm_low >= 0 && rearm_low < 1)) throw ConfigError("cusum.rearm_low must lie in [0, 1)");
}

std::string_view to_string(SegmentKind kind) { return kind == SegmentKind::Scene ? "scene" : "transition"; }

SimilarityVector build_similarity_vector(const std::vector<FeatureSet>& frames, const MatcherParams& params,
                                         Denominator denominator) {
  if (frames.size() < 2) throw SequenceTooShort("similarity vector needs at least 2 frames");
  const int n = static_cast<int>(frames.size()) - 1;
  SimilarityVector w;
  w.values.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<char> degenerate(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const MatchScore s = match_probability(frames[k], frames[k + 1], params, denominator);
    degenerate[k] = s.degenerate || frames[k].empty() || frames[k + 1].empty();
    w.values[k] = degenerate[k] ? 0.0 : s.probability;
  }
  w.degenerate_mask.assign(degenerate.begin(), degenerate.end());
  return w;
}

SimilarityVector build_similarity_vector(const std::vector<FramePair>& frames, const FeatureParams& features,
                                         const MatcherParams& params, Denominator denominator) {
  if (frames.size() < 2) throw SequenceTooShort("similarity vector needs at least 2 frames");
  std::vector<FeatureSet> sets(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) sets[i] = detect_and_describe(frames[i].small.image, features);
  return build_similarity_vector(sets, params, denominator);
}

ChangeDetection detect_changes(const SimilarityVector& w, const CusumParams& params) {
  params.validate();
  const int n = static_cast<int>(w.size());
  ChangeDetection out;
  out.statistic.assign(w.size(), 0.0);
  out.alarm.assign(w.size(), false);
  if (n > 0 && std::all_of(w.degenerate_mask.begin(), w.degenerate_mask.end(), [](bool b) { return b; }) &&
      w.degenerate_mask.size() == w.size()) {
    out.warnings.push_back("every frame pair is degenerate (no keypoints); treating the video as one scene");
    return out;
  }

  const double d2 = params.rearm_low;
  bool armed = true;
  int scene_start = 0;  // first sample of the current scene
  double g = 0;
  int last_zero = -1;
  double scene_sum = 0;  // sum of w[scene_start .. i-1]
  double delta_t = 0;    // delta frozen at the drop alarm

  for (int i = 0; i < n; ++i) {
    const double wi = w.values[static_cast<std::size_t>(i)];
    if (armed) {
      const int seen = i - scene_start;
      double delta = 0;
      bool active = true;
      if (params.delta) {
        delta = *params.delta;
      } else if (seen >= params.warmup) {
        delta = scene_sum / seen;
      } else {
        active = false;
      }
      if (active && delta > d2) {
        g = std::max(0.0, g + (delta - d2) * ((delta + d2) / 2 - wi));
      } else {
        g = 0;
      }
      if (g == 0) last_zero = i;
      out.statistic[static_cast<std::size_t>(i)] = g;
      scene_sum += wi;
      if (g >= params.alpha) {
        out.alarm[static_cast<std::size_t>(i)] = true;
        out.events.push_back({AlarmKind::Drop, i, last_zero + 1});
        armed = false;
        delta_t = delta;
        g = 0;
        last_zero = i;
      }
    } else {
      g = std::max(0.0, g + (delta_t - d2) * (wi - (delta_t + d2) / 2));
      if (g == 0) last_zero = i;
      out.statistic[static_cast<std::size_t>(i)] = g;
      if (g >= params.alpha) {
        out.alarm[static_cast<std::size_t>(i)] = true;
        out.events.push_back({AlarmKind::Resume, i, last_zero + 1});
        armed = true;
        scene_start = last_zero + 1;
        scene_sum = 0;
        for (int k = scene_start; k <= i; ++k) scene_sum += w.values[static_cast<std::size_t>(k)];
        g = 0;
        last_zero = i;
      }
    }
  }
  return out;
}

std::vector<Segment> segments_from_changes(const ChangeDetection& detection, int n_frames) {
  std::vector<Segment> out;
  if (n_frames <= 0) return out;
  const int n_samples = n_frames - 1;
  int start = 0;
  const auto& ev = detection.events;
  for (std::size_t e = 0; e < ev.size(); ++e) {
    if (ev[e].kind != AlarmKind::Drop) continue;
    const int last = ev[e].change;  // final frame of the scene
    out.push_back({start, last, SegmentKind::Scene});
    if (e + 1 < ev.size() && ev[e + 1].kind == AlarmKind::Resume) {
      const int resume = ev[e + 1].change;
      if (resume > last + 1) out.push_back({last + 1, resume - 1, SegmentKind::Transition});
      start = resume;
    } else {
      const bool observed_after = ev[e].alarm < n_samples - 1;
      out.push_back({last + 1, n_frames - 1, observed_after ? SegmentKind::Transition : SegmentKind::Scene});
      return out;
    }
  }
  out.push_back({start, n_frames - 1, SegmentKind::Scene});
  return out;
}

std::vector<Segment> segment_video(const SimilarityVector& w, const CusumParams& params) {
  return segments_from_changes(detect_changes(w, params), static_cast<int>(w.size()) + 1);
}

std::vector<Segment> segment_video(const std::vector<FramePair>& frames, const FeatureParams& features,
                                   const MatcherParams& matcher, const CusumParams& params) {
  return segment_video(build_similarity_vector(frames, features, matcher), params);
}

void write_cusum_csv(const std::filesystem::path& path, const SimilarityVector& w, const ChangeDetection& detection) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "index,w,g,alarm\n";
  char line[128];
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%d\n", i, w.values[i], detection.statistic[i],
                  detection.alarm[i] ? 1 : 0);
    out << line;
  }
}

}  // namespace tislf
