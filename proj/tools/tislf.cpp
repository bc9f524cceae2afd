// tislf: run the retrieval pipeline or one of its stages.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tislf/config.hpp"
#include "tislf/errors.hpp"
#include "tislf/frame_io.hpp"
#include "tislf/image_io.hpp"
#include "tislf/pipeline.hpp"

namespace {

using namespace tislf;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Input: return 3;
    case ErrorKind::Internal: return 4;
  }
  return 4;
}

PipelineConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
  PipelineConfig cfg = path.empty() ? PipelineConfig{} : load_config(path);
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

void print_segments(const std::vector<Segment>& segments, double fps) {
  std::printf("%-5s %-10s %8s %8s %10s %10s\n", "id", "kind", "start", "end", "start_s", "end_s");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    std::printf("%-5zu %-10s %8d %8d %10.3f %10.3f\n", i, std::string(to_string(s.kind)).c_str(), s.start_idx,
                s.end_idx, s.start_idx / fps, s.end_idx / fps);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target retrieval in video: scene segmentation, recognition and appearance intervals"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--set", overrides, "override one config key (key=value), repeatable");
  };

  std::string frames_dir, targets_path, out_path, truth_path, plots_dir;
  auto* run = app.add_subcommand("run", "full pipeline, writes a JSON report");
  add_config(run);
  run->add_option("--frames", frames_dir, "directory of numbered frames");
  run->add_option("--targets", targets_path, "targets manifest (target_id group_id path)")->required();
  run->add_option("--out", out_path, "report path")->required();
  run->add_option("--ground-truth", truth_path, "ground_truth.json for evaluation");
  run->add_option("--plots", plots_dir, "directory for plot CSVs");

  std::string csv_path;
  auto* segment = app.add_subcommand("segment", "similarity vector and scene segmentation only");
  add_config(segment);
  segment->add_option("--frames", frames_dir, "directory of numbered frames");
  segment->add_option("--csv", csv_path, "write index,w,g,alarm per frame pair");

  std::string image_a, image_b, denominator = "second";
  auto* match = app.add_subcommand("match", "matching probability between two images");
  add_config(match);
  match->add_option("a", image_a, "first image")->required();
  match->add_option("b", image_b, "second (reference) image")->required();
  match->add_option("--denominator", denominator, "second, min or union");

  std::string image_path, dump_path;
  auto* features = app.add_subcommand("features", "detect keypoints and dump descriptors");
  add_config(features);
  features->add_option("image", image_path, "input image")->required();
  features->add_option("--out", dump_path, "dump file (default: stdout summary only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors count as config errors
  }

  try {
    const PipelineConfig cfg = make_config(config_path, overrides);

    if (*run) {
      PipelineInputs inputs;
      inputs.frames_dir = frames_dir;
      inputs.targets_manifest = targets_path;
      if (!truth_path.empty()) inputs.ground_truth = truth_path;
      if (!plots_dir.empty()) inputs.plots_dir = plots_dir;
      const Report report = run_pipeline(cfg, inputs);
      write_report(out_path, report);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      std::size_t scenes = 0;
      for (const auto& s : report.scenes) scenes += s.kind == SegmentKind::Scene;
      std::printf("%d frames, %zu scenes\n", report.n_frames, scenes);
      for (const auto& g : report.groups) {
        std::printf("  %-16s %8.2f s in %zu interval(s)\n", g.group.c_str(), g.total_visible_s, g.intervals.size());
      }
      if (report.evaluation) {
        std::printf("precision %.4f  recall %.4f  max |error rate| %.4f s/min\n", report.evaluation->precision,
                    report.evaluation->recall, report.evaluation->max_abs_error_rate * 60);
      }
    } else if (*segment) {
      IngestConfig ingest = cfg.ingest;
      if (!frames_dir.empty()) ingest.frames_dir = frames_dir;
      if (ingest.frames_dir.empty()) throw ConfigError("no frames directory given");
      const auto frames = load_sequence(ingest.frames_dir, ingest);
      const auto w = build_similarity_vector(frames, cfg.features, cfg.matcher, cfg.denominator);
      const auto detection = detect_changes(w, cfg.cusum);
      for (const auto& msg : detection.warnings) std::cerr << "warning: " << msg << '\n';
      if (!csv_path.empty()) write_cusum_csv(csv_path, w, detection);
      print_segments(segments_from_changes(detection, static_cast<int>(frames.size())), ingest.effective_fps);
    } else if (*match) {
      const auto d = parse_denominator(denominator);
      if (!d) throw ConfigError("--denominator must be second, min or union");
      const auto fa = detect_and_describe(read_gray(image_a), cfg.features);
      const auto fb = detect_and_describe(read_gray(image_b), cfg.features);
      const MatchScore s = match_probability(fa, fb, cfg.matcher, *d);
      std::printf("keypoints %zu / %zu  inliers %zu  probability %.6f%s\n", fa.size(), fb.size(),
                  s.result.inliers.size(), s.probability, s.degenerate ? "  (degenerate)" : "");
    } else if (*features) {
      const GrayImage image = read_gray(image_path);
      const FeatureSet fs = detect_and_describe(image, cfg.features);
      std::printf("%dx%d: %zu keypoints\n", image.width(), image.height(), fs.size());
      if (!dump_path.empty()) {
        std::ofstream out(dump_path);
        if (!out) throw InputError("cannot write '" + dump_path + "'");
        write_feature_dump(out, fs);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
