#pragma once

#include <span>
#include <string>
#include <vector>

#include "tislf/recognition.hpp"

namespace tislf {

struct EstimationParams {
  int t_stand = 3;  // frames; shorter runs are dropped
  int t_lost = 3;   // frames; gaps up to this long are filled
  double beta = 1.0;

  void validate() const;
};

/// Fills interior false runs of length <= t_lost. Leading and trailing runs stay.
std::vector<bool> bridge_gaps(const std::vector<bool>& presence, int t_lost);

/// Clears true runs shorter than t_stand.
std::vector<bool> prune_short(const std::vector<bool>& presence, int t_stand);

/// bridge_gaps then prune_short.
std::vector<bool> smooth_presence(const std::vector<bool>& presence, const EstimationParams& params);

struct GaussianStats {
  double mean = 0;
  double var = 1e-6;
};

constexpr double kVarianceFloor = 1e-6;

/// Maximum-likelihood mean and variance, variance floored.
GaussianStats fit_gaussian(std::span<const double> samples);

double gaussian_log_likelihood(std::span<const double> samples, const GaussianStats& stats);

enum class Assignment { A, B };

/// A iff L(samples | a) / L(samples | b) > beta; a tie goes to B.
Assignment glrt_resolve(std::span<const double> disputed, const GaussianStats& a, const GaussianStats& b, double beta);

struct AppearanceInterval {
  std::string group;
  int scene_id = 0;
  int start_idx = 0;  // inclusive global frame indices
  int end_idx = 0;
  double start_s = 0;
  double end_s = 0;
  double mean_probability = 0;

  double duration_s(double fps) const { return (end_idx - start_idx + 1) / fps; }
};

/// One resolved handover between two groups.
struct GlrtDecision {
  int scene_id = 0;
  std::string first;   // group whose run ends inside the window
  std::string second;  // group whose run starts inside the window
  int start_idx = 0;
  int end_idx = 0;
  std::string winner;
  double log_ratio = 0;  // ln L(first) - ln L(second)
};

struct EstimationResult {
  std::vector<AppearanceInterval> intervals;  // ordered by (scene, group, start)
  std::vector<GlrtDecision> decisions;
  std::vector<std::vector<bool>> presence;  // final per-timeline presence, same order as the input
};

/// Per timeline: smooth, then settle overlapping handovers between groups of the
/// same scene by GLRT when both runs overlap in time and in frame position.
EstimationResult estimate_intervals(const std::vector<GroupTimeline>& timelines, const EstimationParams& params,
                                    double effective_fps);

}  // namespace tislf
