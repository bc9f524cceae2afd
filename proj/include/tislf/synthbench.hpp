#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tislf/image.hpp"
#include "tislf/procedural.hpp"
#include "tislf/targets.hpp"

namespace tislf::synth {

/// Placement of a sprite in frame coordinates; (x, y) is the sprite centre.
struct Pose {
  double x = 0;
  double y = 0;
  double scale = 1.0;
  double rotation_deg = 0;
};

enum class Side { Left, Right, Top, Bottom };

/// Covers `fraction` of the placed sprite, measured from `side`, for frames [start, end].
struct Occlusion {
  int start = 0;
  int end = 0;
  double fraction = 0;
  Side side = Side::Right;
};

struct Placement {
  std::string target;
  int start = 0;
  int end = 0;
  Pose from;  // pose at `start`, linearly interpolated to `to` at `end`
  Pose to;
  std::vector<Occlusion> occlusions;
};

/// A procedurally generated picture that is not a target.
struct Distractor {
  std::uint64_t seed = 0;
  int width = 96;
  int height = 72;
  int start = 0;
  int end = 0;
  Pose from;
  Pose to;
};

struct BackgroundParams {
  NoiseParams noise{5, 48.0, 0.6};
  double contrast = 2.5;   // stretch around mid-gray
  double pan_x = 1.5;      // pixels per frame within a scene
  double pan_y = 0.75;
  double noise_sigma = 2.0;  // additive sensor noise, 8-bit units
};

struct SynthScript {
  std::uint64_t seed = 1;
  int width = 320;
  int height = 240;
  int n_frames = 100;
  std::vector<int> cuts;  // first frame of each new scene, strictly increasing
  BackgroundParams background;
  std::vector<Placement> placements;
  std::vector<Distractor> distractors;
};

struct TruthInterval {
  std::string group;
  int start = 0;
  int end = 0;

  friend bool operator==(const TruthInterval&, const TruthInterval&) = default;
};

struct GroundTruth {
  std::vector<int> cuts;
  std::vector<TruthInterval> intervals;  // sorted by (group, start); same-group overlaps merged
};

/// Sprites addressed by target id, plus the id -> group mapping.
struct TargetLibrary {
  std::map<std::string, GrayImage> images;
  std::map<std::string, std::string> groups;

  static TargetLibrary load(const std::vector<TargetEntry>& manifest);
};

/// Throws ScriptError on any violated script invariant.
void validate(const SynthScript& script, const TargetLibrary& targets);

SynthScript script_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthScript& script);
SynthScript load_script(const std::filesystem::path& path);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
GroundTruth load_ground_truth(const std::filesystem::path& path);

GroundTruth ground_truth(const SynthScript& script, const TargetLibrary& targets);

/// Renders one frame; a pure function of (script, targets, index).
GrayImage render_frame(const SynthScript& script, const TargetLibrary& targets, int index);

/// Renders all frames in memory.
std::vector<GrayImage> render_frames(const SynthScript& script, const TargetLibrary& targets);

/// Writes `frame_%06d.png` and `ground_truth.json` into `out_dir`.
GroundTruth render(const SynthScript& script, const TargetLibrary& targets, const std::filesystem::path& out_dir);

/// Shape of a randomly generated benchmark video.
struct CorpusParams {
  int width = 320;
  int height = 240;
  int n_frames = 200;
  int min_cuts = 2;
  int max_cuts = 5;
  int min_scene = 25;
  int min_interval = 12;  // shortest on-screen run of a target
  double max_occlusion = 0.5;
  double target_prob = 0.65;  // per slot; two slots (left, right) per scene
  double distractor_prob = 0.25;
};

/// `n` procedural targets "t0".."t{n-1}", each in its own group "g0".."g{n-1}".
TargetLibrary make_target_library(int n, std::uint64_t seed, int width = 160, int height = 120);

/// Writes the library's images as PNGs plus a `targets.txt` manifest; returns the manifest path.
std::filesystem::path write_target_library(const TargetLibrary& lib, const std::filesystem::path& dir);

/// Random script with cuts, targets in left/right slots, occlusions and distractors.
SynthScript make_corpus_script(std::uint64_t seed, const TargetLibrary& targets, const CorpusParams& params = {});

}  // namespace tislf::synth
