#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tislf/config.hpp"
#include "tislf/estimation.hpp"
#include "tislf/recognition.hpp"
#include "tislf/segmentation.hpp"
#include "tislf/synthbench.hpp"

namespace tislf {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr const char* kReportSchema = "tislf.report/1";

struct SceneReport {
  int id = 0;
  int start_idx = 0;
  int end_idx = 0;
  double start_s = 0;
  double end_s = 0;
  SegmentKind kind = SegmentKind::Scene;
};

struct GroupReport {
  std::string group;
  double total_visible_s = 0;
  std::vector<AppearanceInterval> intervals;  // sorted by start
};

struct GroupEvaluation {
  std::string group;
  double computed_s = 0;
  double ground_truth_s = 0;
  double error_rate = 0;  // (computed - truth) / video time
};

/// Frame-level presence scores against ground truth, pooled over groups.
struct Evaluation {
  std::vector<GroupEvaluation> groups;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 1;
  double recall = 1;
  double max_abs_error_rate = 0;
  int max_boundary_error = 0;  // over truth intervals matched to a computed interval
  std::size_t missed_intervals = 0;
  std::size_t spurious_intervals = 0;
  std::vector<int> cut_errors;  // detected - injected, per injected cut; missing cuts absent
  std::size_t missed_cuts = 0;
  std::size_t spurious_cuts = 0;
};

struct Report {
  std::string version = kVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0;
  int n_frames = 0;
  double effective_fps = 1;
  std::map<std::string, std::string> config;
  std::vector<SceneReport> scenes;
  std::vector<GroupReport> groups;
  std::vector<GlrtDecision> decisions;
  std::vector<std::string> warnings;
  std::optional<Evaluation> evaluation;

  double video_time_s() const { return n_frames / effective_fps; }
};

/// Intermediate products kept for plot data and tests.
struct PipelineArtifacts {
  SimilarityVector similarity;
  ChangeDetection detection;
  std::vector<Segment> segments;
  std::vector<MatchingMatrix> matrices;  // one per scene segment
  std::vector<std::string> target_ids;   // matrix column labels
  std::vector<GroupTimeline> timelines;
};

struct PipelineInputs {
  std::filesystem::path frames_dir;  // overrides config frames_dir when set
  std::filesystem::path targets_manifest;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::filesystem::path> plots_dir;  // similarity.csv is flushed as soon as it exists
};

/// All stages on already-loaded data.
Report run_pipeline(const PipelineConfig& config, const std::vector<FramePair>& frames,
                    const std::vector<TargetImage>& targets, PipelineArtifacts* artifacts = nullptr,
                    const std::optional<std::filesystem::path>& plots_dir = std::nullopt);

/// Loads frames and targets, runs every stage, evaluates against ground truth when given.
/// Stage failures are rethrown with the stage name prefixed and their error kind kept.
Report run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs,
                    PipelineArtifacts* artifacts = nullptr);

/// Merges adjacent per-scene intervals of a group before comparing with truth.
Evaluation evaluate(const Report& report, const synth::GroundTruth& truth);

/// Scenes reported by the pipeline, as first frames of each new scene.
std::vector<int> detected_cuts(const Report& report);

nlohmann::json to_json(const Report& report, bool include_wall_time = true);
void write_report(const std::filesystem::path& path, const Report& report);

/// totals.csv, similarity.csv and matrix_scene_<k>.csv into `dir`.
void emit_plot_data(const std::filesystem::path& dir, const Report& report, const PipelineArtifacts& artifacts);

void write_matrix_csv(const std::filesystem::path& path, const MatchingMatrix& mat,
                      const std::vector<std::string>& target_ids);

/// Inverse of write_matrix_csv: rows x cols values in row order.
std::vector<std::vector<double>> read_matrix_csv(const std::filesystem::path& path);

}  // namespace tislf
