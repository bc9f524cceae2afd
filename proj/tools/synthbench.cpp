// synthbench: render synthetic benchmark videos with ground truth.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "tislf/errors.hpp"
#include "tislf/synthbench.hpp"
#include "tislf/targets.hpp"

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

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic videos with known target intervals and scene cuts"};
  app.require_subcommand(1);

  std::string script_path, targets_path, out_dir;
  auto* generate = app.add_subcommand("generate", "render a script into frame_%06d.png + ground_truth.json");
  generate->add_option("--script", script_path, "script JSON")->required();
  generate->add_option("--targets", targets_path, "targets manifest")->required();
  generate->add_option("--out", out_dir, "output directory")->required();

  int n_targets = 5;
  std::uint64_t seed = 7;
  int width = 160, height = 120;
  auto* targets = app.add_subcommand("targets", "write procedural target images and a manifest");
  targets->add_option("--count", n_targets, "number of targets")->check(CLI::PositiveNumber);
  targets->add_option("--seed", seed, "seed");
  targets->add_option("--width", width, "target width")->check(CLI::Range(16, 4096));
  targets->add_option("--height", height, "target height")->check(CLI::Range(16, 4096));
  targets->add_option("--out", out_dir, "output directory")->required();

  int n_frames = 200, min_cuts = 2, max_cuts = 5;
  bool render_frames = false;
  auto* corpus = app.add_subcommand("corpus", "write a random benchmark script (and optionally render it)");
  corpus->add_option("--seed", seed, "script seed");
  corpus->add_option("--targets", targets_path, "targets manifest")->required();
  corpus->add_option("--frames", n_frames, "frames per video")->check(CLI::PositiveNumber);
  corpus->add_option("--min-cuts", min_cuts, "fewest cuts")->check(CLI::NonNegativeNumber);
  corpus->add_option("--max-cuts", max_cuts, "most cuts")->check(CLI::NonNegativeNumber);
  corpus->add_option("--out", out_dir, "output directory")->required();
  corpus->add_flag("--render", render_frames, "also render frames and ground truth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) {
      const auto lib = synth::TargetLibrary::load(read_manifest(targets_path));
      const auto script = synth::load_script(script_path);
      const auto truth = synth::render(script, lib, out_dir);
      std::printf("%d frames, %zu cuts, %zu intervals -> %s\n", script.n_frames, truth.cuts.size(),
                  truth.intervals.size(), out_dir.c_str());
    } else if (*targets) {
      const auto lib = synth::make_target_library(n_targets, seed, width, height);
      std::printf("%s\n", synth::write_target_library(lib, out_dir).string().c_str());
    } else if (*corpus) {
      const auto lib = synth::TargetLibrary::load(read_manifest(targets_path));
      synth::CorpusParams params;
      params.n_frames = n_frames;
      params.min_cuts = min_cuts;
      params.max_cuts = max_cuts;
      const auto script = synth::make_corpus_script(seed, lib, params);
      std::filesystem::create_directories(out_dir);
      std::ofstream(std::filesystem::path(out_dir) / "script.json") << synth::to_json(script).dump(2) << '\n';
      if (render_frames) synth::render(script, lib, out_dir);
      std::printf("%s\n", (std::filesystem::path(out_dir) / "script.json").string().c_str());
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
