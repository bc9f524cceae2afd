#include "tislf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tislf/errors.hpp"
#include "tislf/frame_io.hpp"

namespace tislf {

namespace {

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw InternalError(std::string(name) + ": " + e.what());
  }
}

std::vector<FeatureSet> describe_all(const std::vector<FramePair>& frames, const FeatureParams& params, bool small,
                                     const std::vector<bool>& wanted) {
  std::vector<FeatureSet> out(frames.size());
  const int n = static_cast<int>(frames.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!wanted[k]) continue;
    out[k] = detect_and_describe(small ? frames[k].small.image : frames[k].full.image, params);
  }
  return out;
}

}  // namespace

Report run_pipeline(const PipelineConfig& config, const std::vector<FramePair>& frames,
                    const std::vector<TargetImage>& targets, PipelineArtifacts* artifacts,
                    const std::optional<std::filesystem::path>& plots_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  Report report;
  report.config_hash = config_hash(config);
  report.seed = config.matcher.seed;
  report.config = config_values(config);
  report.n_frames = static_cast<int>(frames.size());
  report.effective_fps = config.ingest.effective_fps;
  const double fps = config.ingest.effective_fps;

  PipelineArtifacts local;
  PipelineArtifacts& art = artifacts ? *artifacts : local;
  art = {};
  for (const auto& t : targets) art.target_ids.push_back(t.id);

  // Segmentation on the downsampled copies.
  const std::vector<bool> all(frames.size(), true);
  const auto small_features = stage("segmentation", [&] {
    if (frames.size() < 2) throw SequenceTooShort("need at least 2 frames, got " + std::to_string(frames.size()));
    return describe_all(frames, config.features, true, all);
  });
  art.similarity = stage("segmentation", [&] {
    return build_similarity_vector(small_features, config.matcher, config.denominator);
  });
  art.detection = stage("segmentation", [&] { return detect_changes(art.similarity, config.cusum); });
  art.segments = segments_from_changes(art.detection, report.n_frames);
  for (const auto& w : art.detection.warnings) report.warnings.push_back("segmentation: " + w);
  if (plots_dir) {
    std::filesystem::create_directories(*plots_dir);
    write_cusum_csv(*plots_dir / "similarity.csv", art.similarity, art.detection);
  }
  for (std::size_t s = 0; s < art.segments.size(); ++s) {
    const Segment& seg = art.segments[s];
    report.scenes.push_back({static_cast<int>(s), seg.start_idx, seg.end_idx, seg.start_idx / fps, seg.end_idx / fps,
                             seg.kind});
  }

  // Recognition on full-resolution frames of scene segments only.
  std::vector<bool> in_scene(frames.size(), false);
  for (const Segment& seg : art.segments) {
    if (seg.kind != SegmentKind::Scene) continue;
    for (int i = seg.start_idx; i <= seg.end_idx; ++i) in_scene[static_cast<std::size_t>(i)] = true;
  }
  const bool same_size = std::all_of(frames.begin(), frames.end(), [](const FramePair& f) {
    return f.full.image.width() == f.small.image.width() && f.full.image.height() == f.small.image.height();
  });
  const auto full_features =
      same_size ? small_features
                : stage("recognition", [&] { return describe_all(frames, config.features, false, in_scene); });

  std::vector<ChunkDistribution> refs;
  for (const auto& t : targets) refs.push_back(self_match_reference(t));
  for (std::size_t s = 0; s < art.segments.size(); ++s) {
    const Segment& seg = art.segments[s];
    if (seg.kind != SegmentKind::Scene) continue;
    stage("recognition", [&] {
      const std::span<const FeatureSet> scene(full_features.data() + seg.start_idx,
                                              static_cast<std::size_t>(seg.length()));
      MatchingMatrix mat = build_matching_matrix(scene, targets, config.matcher, static_cast<int>(s), seg.start_idx);
      for (int i = 0; i < mat.rows; ++i) {
        for (int j = 0; j < mat.cols; ++j) {
          double sum = 0;
          for (int k = 0; k < mat.chunks; ++k) sum += mat.chunk(i, j, k);
          if (std::abs(sum - mat.at(i, j)) >= 1e-12) throw InternalError("matrix entry differs from its chunk sum");
        }
      }
      const auto candidates = select_candidates(mat, targets, refs, config.recognition);
      for (auto& tl : group_timelines(mat, targets, candidates)) art.timelines.push_back(std::move(tl));
      art.matrices.push_back(std::move(mat));
      return 0;
    });
  }

  const EstimationResult est =
      stage("estimation", [&] { return estimate_intervals(art.timelines, config.estimation, fps); });
  report.decisions = est.decisions;

  std::vector<std::string> group_order;
  for (const auto& t : targets) {
    if (std::find(group_order.begin(), group_order.end(), t.group_id) == group_order.end()) {
      group_order.push_back(t.group_id);
    }
  }
  for (const auto& g : group_order) {
    GroupReport gr;
    gr.group = g;
    for (const auto& iv : est.intervals) {
      if (iv.group == g) gr.intervals.push_back(iv);
    }
    std::sort(gr.intervals.begin(), gr.intervals.end(),
              [](const auto& a, const auto& b) { return a.start_idx < b.start_idx; });
    for (const auto& iv : gr.intervals) gr.total_visible_s += iv.duration_s(fps);
    report.groups.push_back(std::move(gr));
  }

  // Totals must agree with the presence vectors they came from.
  for (const auto& gr : report.groups) {
    std::size_t frames_on = 0;
    for (std::size_t t = 0; t < art.timelines.size(); ++t) {
      if (art.timelines[t].group != gr.group) continue;
      frames_on += static_cast<std::size_t>(std::count(est.presence[t].begin(), est.presence[t].end(), true));
    }
    if (std::abs(static_cast<double>(frames_on) / fps - gr.total_visible_s) > 1e-9 * (1 + gr.total_visible_s)) {
      throw InternalError("estimation: total for group '" + gr.group + "' disagrees with its presence frames");
    }
  }

  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Report run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs, PipelineArtifacts* artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg = config;
  if (!inputs.frames_dir.empty()) cfg.ingest.frames_dir = inputs.frames_dir;
  if (cfg.ingest.frames_dir.empty()) throw ConfigError("no frames directory given");
  cfg.validate();

  const auto frames = stage("ingest", [&] { return load_sequence(cfg.ingest.frames_dir, cfg.ingest); });
  const auto targets = stage("targets", [&] {
    return load_targets(read_manifest(inputs.targets_manifest), cfg.features, cfg.recognition.chunks);
  });
  std::optional<synth::GroundTruth> truth;
  if (inputs.ground_truth) truth = stage("evaluation", [&] { return synth::load_ground_truth(*inputs.ground_truth); });

  PipelineArtifacts local;
  PipelineArtifacts& art = artifacts ? *artifacts : local;
  Report report = run_pipeline(cfg, frames, targets, &art, inputs.plots_dir);
  if (truth) report.evaluation = evaluate(report, *truth);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (inputs.plots_dir) emit_plot_data(*inputs.plots_dir, report, art);
  return report;
}

std::vector<int> detected_cuts(const Report& report) {
  std::vector<int> cuts;
  for (std::size_t i = 1; i < report.scenes.size(); ++i) {
    if (report.scenes[i - 1].kind == SegmentKind::Scene) cuts.push_back(report.scenes[i].start_idx);
  }
  return cuts;
}

Evaluation evaluate(const Report& report, const synth::GroundTruth& truth) {
  Evaluation ev;
  const double fps = report.effective_fps;
  const double video = report.video_time_s();

  std::map<std::string, std::vector<std::pair<int, int>>> computed, expected;
  for (const auto& g : report.groups) {
    auto& spans = computed[g.group];
    for (const auto& iv : g.intervals) {
      if (!spans.empty() && iv.start_idx <= spans.back().second + 1) {
        spans.back().second = std::max(spans.back().second, iv.end_idx);
      } else {
        spans.emplace_back(iv.start_idx, iv.end_idx);
      }
    }
  }
  for (const auto& iv : truth.intervals) expected[iv.group].emplace_back(iv.start, iv.end);
  for (auto& [g, spans] : expected) {
    std::sort(spans.begin(), spans.end());
    computed[g];  // groups only in the truth still get a row
  }

  for (const auto& [group, spans] : computed) {
    const auto& want = expected[group];
    std::set<int> on, truth_on;
    for (const auto& [a, b] : spans) {
      for (int i = a; i <= b; ++i) on.insert(i);
    }
    for (const auto& [a, b] : want) {
      for (int i = a; i <= b; ++i) truth_on.insert(i);
    }
    for (int i : on) {
      if (truth_on.contains(i)) {
        ++ev.true_positives;
      } else {
        ++ev.false_positives;
      }
    }
    for (int i : truth_on) {
      if (!on.contains(i)) ++ev.false_negatives;
    }
    GroupEvaluation ge;
    ge.group = group;
    ge.computed_s = static_cast<double>(on.size()) / fps;
    ge.ground_truth_s = static_cast<double>(truth_on.size()) / fps;
    ge.error_rate = (ge.computed_s - ge.ground_truth_s) / video;
    ev.max_abs_error_rate = std::max(ev.max_abs_error_rate, std::abs(ge.error_rate));
    ev.groups.push_back(ge);

    std::vector<bool> used(spans.size(), false);
    for (const auto& [ta, tb] : want) {
      int best = -1;
      int best_overlap = 0;
      for (std::size_t c = 0; c < spans.size(); ++c) {
        const int overlap = std::min(tb, spans[c].second) - std::max(ta, spans[c].first) + 1;
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = static_cast<int>(c);
        }
      }
      if (best < 0) {
        ++ev.missed_intervals;
        continue;
      }
      used[static_cast<std::size_t>(best)] = true;
      const auto& [ca, cb] = spans[static_cast<std::size_t>(best)];
      ev.max_boundary_error = std::max({ev.max_boundary_error, std::abs(ca - ta), std::abs(cb - tb)});
    }
    ev.spurious_intervals += static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  }
  const std::size_t tp_fp = ev.true_positives + ev.false_positives;
  const std::size_t tp_fn = ev.true_positives + ev.false_negatives;
  ev.precision = tp_fp == 0 ? 1.0 : static_cast<double>(ev.true_positives) / static_cast<double>(tp_fp);
  ev.recall = tp_fn == 0 ? 1.0 : static_cast<double>(ev.true_positives) / static_cast<double>(tp_fn);

  std::vector<int> found = detected_cuts(report);
  std::vector<bool> claimed(found.size(), false);
  for (int cut : truth.cuts) {
    int best = -1;
    for (std::size_t d = 0; d < found.size(); ++d) {
      if (claimed[d] || std::abs(found[d] - cut) > 10) continue;
      if (best < 0 || std::abs(found[d] - cut) < std::abs(found[static_cast<std::size_t>(best)] - cut)) {
        best = static_cast<int>(d);
      }
    }
    if (best < 0) {
      ++ev.missed_cuts;
      continue;
    }
    claimed[static_cast<std::size_t>(best)] = true;
    ev.cut_errors.push_back(found[static_cast<std::size_t>(best)] - cut);
  }
  ev.spurious_cuts = static_cast<std::size_t>(std::count(claimed.begin(), claimed.end(), false));
  return ev;
}

nlohmann::json to_json(const Report& report, bool include_wall_time) {
  using nlohmann::json;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.config_hash));
  json j;
  j["schema"] = kReportSchema;
  j["metadata"] = {{"version", report.version},
                   {"config_hash", hash},
                   {"seed", report.seed},
                   {"n_frames", report.n_frames},
                   {"effective_fps", report.effective_fps},
                   {"video_time_s", report.video_time_s()}};
  if (include_wall_time) j["metadata"]["wall_time_s"] = report.wall_time_s;
  j["config"] = report.config;
  j["scenes"] = json::array();
  for (const auto& s : report.scenes) {
    j["scenes"].push_back({{"id", s.id},
                           {"kind", to_string(s.kind)},
                           {"start_idx", s.start_idx},
                           {"end_idx", s.end_idx},
                           {"start_s", s.start_s},
                           {"end_s", s.end_s}});
  }
  j["groups"] = json::array();
  for (const auto& g : report.groups) {
    json intervals = json::array();
    for (const auto& iv : g.intervals) {
      intervals.push_back({{"scene_id", iv.scene_id},
                           {"start_idx", iv.start_idx},
                           {"end_idx", iv.end_idx},
                           {"start_s", iv.start_s},
                           {"end_s", iv.end_s},
                           {"mean_probability", iv.mean_probability}});
    }
    j["groups"].push_back({{"group", g.group}, {"total_visible_s", g.total_visible_s}, {"intervals", intervals}});
  }
  j["glrt"] = json::array();
  for (const auto& d : report.decisions) {
    j["glrt"].push_back({{"scene_id", d.scene_id},
                         {"first", d.first},
                         {"second", d.second},
                         {"start_idx", d.start_idx},
                         {"end_idx", d.end_idx},
                         {"winner", d.winner},
                         {"log_ratio", d.log_ratio}});
  }
  j["warnings"] = report.warnings;
  if (report.evaluation) {
    const Evaluation& ev = *report.evaluation;
    json groups = json::array();
    for (const auto& g : ev.groups) {
      groups.push_back({{"group", g.group},
                        {"computed_s", g.computed_s},
                        {"ground_truth_s", g.ground_truth_s},
                        {"error_rate", g.error_rate}});
    }
    j["evaluation"] = {{"groups", groups},
                       {"precision", ev.precision},
                       {"recall", ev.recall},
                       {"true_positives", ev.true_positives},
                       {"false_positives", ev.false_positives},
                       {"false_negatives", ev.false_negatives},
                       {"max_abs_error_rate", ev.max_abs_error_rate},
                       {"max_boundary_error", ev.max_boundary_error},
                       {"missed_intervals", ev.missed_intervals},
                       {"spurious_intervals", ev.spurious_intervals},
                       {"cut_errors", ev.cut_errors},
                       {"missed_cuts", ev.missed_cuts},
                       {"spurious_cuts", ev.spurious_cuts}};
  }
  return j;
}

void write_report(const std::filesystem::path& path, const Report& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << to_json(report).dump(2) << '\n';
}

void write_matrix_csv(const std::filesystem::path& path, const MatchingMatrix& mat,
                      const std::vector<std::string>& target_ids) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "frame";
  for (const auto& id : target_ids) out << ',' << id;
  out << '\n';
  char buf[32];
  for (int i = 0; i < mat.rows; ++i) {
    out << mat.first_frame + i;
    for (int j = 0; j < mat.cols; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", mat.at(i, j));
      out << buf;
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("matrix csv not found: '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::getline(fields, cell, ',');  // frame index
    std::vector<double> row;
    while (std::getline(fields, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit_plot_data(const std::filesystem::path& dir, const Report& report, const PipelineArtifacts& artifacts) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "totals.csv");
    if (!out) throw InputError("cannot write into '" + dir.string() + "'");
    out << "group,computed_s,ground_truth_s\n";
    char buf[96];
    for (const auto& g : report.groups) {
      std::snprintf(buf, sizeof buf, "%.17g", g.total_visible_s);
      out << g.group << ',' << buf << ',';
      if (report.evaluation) {
        for (const auto& ge : report.evaluation->groups) {
          if (ge.group != g.group) continue;
          std::snprintf(buf, sizeof buf, "%.17g", ge.ground_truth_s);
          out << buf;
        }
      }
      out << '\n';
    }
  }
  write_cusum_csv(dir / "similarity.csv", artifacts.similarity, artifacts.detection);
  for (const auto& mat : artifacts.matrices) {
    write_matrix_csv(dir / ("matrix_scene_" + std::to_string(mat.scene_id) + ".csv"), mat, artifacts.target_ids);
  }
}

}  // namespace tislf
