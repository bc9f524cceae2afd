#include "tislf/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "tislf/errors.hpp"
#include "tislf/image_io.hpp"
#include "tislf/kernels.hpp"

namespace tislf::synth {

using nlohmann::json;

TargetLibrary TargetLibrary::load(const std::vector<TargetEntry>& manifest) {
  TargetLibrary lib;
  for (const auto& e : manifest) {
    lib.images[e.id] = read_gray(e.path);
    lib.groups[e.id] = e.group;
  }
  return lib;
}

namespace {

constexpr float kOccluderValue = 0.45f;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

Pose pose_at(const Pose& from, const Pose& to, int start, int end, int frame) {
  const double t = end > start ? static_cast<double>(frame - start) / (end - start) : 0.0;
  return {lerp(from.x, to.x, t), lerp(from.y, to.y, t), lerp(from.scale, to.scale, t),
          lerp(from.rotation_deg, to.rotation_deg, t)};
}

// Axis-aligned extent of a w x h sprite after scaling and rotation.
std::pair<double, double> warped_extent(int w, int h, const Pose& p) {
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(th));
  const double s = std::abs(std::sin(th));
  return {p.scale * (w * c + h * s), p.scale * (w * s + h * c)};
}

std::string side_name(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Bottom: return "bottom";
  }
  return "right";
}

Side parse_side(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "top") return Side::Top;
  if (s == "bottom") return Side::Bottom;
  throw ScriptError("unknown occlusion side '" + s + "'");
}

int scene_of(const SynthScript& script, int frame) {
  return static_cast<int>(std::upper_bound(script.cuts.begin(), script.cuts.end(), frame) - script.cuts.begin());
}

void check_pose(const Pose& p, int w, int h, const SynthScript& script, const std::string& what) {
  if (p.scale < 0.3 || p.scale > 1.5) throw ScriptError(what + ": scale must lie in [0.3, 1.5]");
  if (std::abs(p.rotation_deg) > 15.0) throw ScriptError(what + ": rotation must lie in [-15, 15] degrees");
  const auto [ew, eh] = warped_extent(w, h, p);
  if (ew > script.width || eh > script.height) throw ScriptError(what + ": warped sprite is larger than the frame");
}

void check_range(int start, int end, const SynthScript& script, const std::string& what) {
  if (start < 0 || end < start || end >= script.n_frames) {
    throw ScriptError(what + ": frame range [" + std::to_string(start) + ", " + std::to_string(end) +
                      "] outside [0, " + std::to_string(script.n_frames) + ")");
  }
}

// Pastes `sprite` into `frame` under `pose`, with optional occluded band.
void stamp(FloatImage& frame, const FloatImage& sprite, const Pose& pose, const Occlusion* occ) {
  FloatImage src = sprite;
  if (pose.scale < 1.0) {
    // Anti-alias before shrinking.
    src = kernels::gaussian_blur(sprite, 0.5 * std::sqrt(1.0 / (pose.scale * pose.scale) - 1.0));
  }
  const int tw = src.width();
  const int th = src.height();
  const double rad = pose.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const auto [ew, eh] = warped_extent(tw, th, pose);
  const int x0 = std::max(0, static_cast<int>(std::floor(pose.x - ew / 2)) - 1);
  const int x1 = std::min(frame.width() - 1, static_cast<int>(std::ceil(pose.x + ew / 2)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(pose.y - eh / 2)) - 1);
  const int y1 = std::min(frame.height() - 1, static_cast<int>(std::ceil(pose.y + eh / 2)) + 1);

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - pose.x;
      const double dy = y + 0.5 - pose.y;
      const double u = (c * dx + s * dy) / pose.scale + tw / 2.0;
      const double v = (-s * dx + c * dy) / pose.scale + th / 2.0;
      if (u < 0 || v < 0 || u >= tw || v >= th) continue;
      if (occ) {
        const double f = occ->fraction;
        const bool hidden = (occ->side == Side::Right && u >= (1 - f) * tw) || (occ->side == Side::Left && u < f * tw) ||
                            (occ->side == Side::Bottom && v >= (1 - f) * th) || (occ->side == Side::Top && v < f * th);
        if (hidden) {
          frame(x, y) = kOccluderValue;
          continue;
        }
      }
      const double su = std::clamp(u - 0.5, 0.0, tw - 1.0);
      const double sv = std::clamp(v - 0.5, 0.0, th - 1.0);
      const int iu = std::min(static_cast<int>(su), tw - 2 < 0 ? 0 : tw - 2);
      const int iv = std::min(static_cast<int>(sv), th - 2 < 0 ? 0 : th - 2);
      const double fu = su - iu;
      const double fv = sv - iv;
      const int iu1 = std::min(iu + 1, tw - 1);
      const int iv1 = std::min(iv + 1, th - 1);
      const double top = src(iu, iv) * (1 - fu) + src(iu1, iv) * fu;
      const double bot = src(iu, iv1) * (1 - fu) + src(iu1, iv1) * fu;
      frame(x, y) = static_cast<float>(top * (1 - fv) + bot * fv);
    }
  }
}

Pose pose_from_json(const json& j) {
  Pose p;
  p.x = j.at("x").get<double>();
  p.y = j.at("y").get<double>();
  p.scale = j.value("scale", 1.0);
  p.rotation_deg = j.value("rotation_deg", 0.0);
  return p;
}

json pose_to_json(const Pose& p) {
  return json{{"x", p.x}, {"y", p.y}, {"scale", p.scale}, {"rotation_deg", p.rotation_deg}};
}

}  // namespace

void validate(const SynthScript& script, const TargetLibrary& targets) {
  if (script.width < 16 || script.height < 16) throw ScriptError("frame size must be at least 16x16");
  if (script.n_frames < 1) throw ScriptError("n_frames must be positive");
  for (std::size_t i = 0; i < script.cuts.size(); ++i) {
    if (script.cuts[i] <= 0 || script.cuts[i] >= script.n_frames) throw ScriptError("cut frame out of range");
    if (i > 0 && script.cuts[i] <= script.cuts[i - 1]) throw ScriptError("cut frames must be strictly increasing");
  }
  for (const auto& p : script.placements) {
    const std::string what = "placement of '" + p.target + "'";
    const auto it = targets.images.find(p.target);
    if (it == targets.images.end()) throw ScriptError(what + ": unknown target");
    check_range(p.start, p.end, script, what);
    check_pose(p.from, it->second.width(), it->second.height(), script, what);
    check_pose(p.to, it->second.width(), it->second.height(), script, what);
    for (const auto& o : p.occlusions) {
      check_range(o.start, o.end, script, what + " occlusion");
      if (!(o.fraction >= 0 && o.fraction <= 1)) throw ScriptError(what + ": occlusion fraction must lie in [0,1]");
    }
  }
  for (const auto& d : script.distractors) {
    check_range(d.start, d.end, script, "distractor");
    if (d.width < 16 || d.height < 16) throw ScriptError("distractor must be at least 16x16");
    check_pose(d.from, d.width, d.height, script, "distractor");
    check_pose(d.to, d.width, d.height, script, "distractor");
  }
}

SynthScript script_from_json(const json& j) {
  try {
    SynthScript s;
    s.seed = j.value("seed", std::uint64_t{1});
    s.width = j.value("width", 320);
    s.height = j.value("height", 240);
    s.n_frames = j.at("n_frames").get<int>();
    s.cuts = j.value("cuts", std::vector<int>{});
    if (j.contains("background")) {
      const json& b = j.at("background");
      s.background.noise.octaves = b.value("octaves", s.background.noise.octaves);
      s.background.noise.base_period = b.value("base_period", s.background.noise.base_period);
      s.background.noise.persistence = b.value("persistence", s.background.noise.persistence);
      s.background.contrast = b.value("contrast", s.background.contrast);
      if (b.contains("pan")) {
        s.background.pan_x = b.at("pan").at(0).get<double>();
        s.background.pan_y = b.at("pan").at(1).get<double>();
      }
      s.background.noise_sigma = b.value("noise_sigma", s.background.noise_sigma);
    }
    for (const json& pj : j.value("placements", json::array())) {
      Placement p;
      p.target = pj.at("target").get<std::string>();
      p.start = pj.at("start").get<int>();
      p.end = pj.at("end").get<int>();
      p.from = pose_from_json(pj.at("from"));
      p.to = pj.contains("to") ? pose_from_json(pj.at("to")) : p.from;
      for (const json& oj : pj.value("occlusions", json::array())) {
        Occlusion o;
        o.start = oj.at("start").get<int>();
        o.end = oj.at("end").get<int>();
        o.fraction = oj.at("fraction").get<double>();
        o.side = parse_side(oj.value("side", std::string("right")));
        p.occlusions.push_back(o);
      }
      s.placements.push_back(std::move(p));
    }
    for (const json& dj : j.value("distractors", json::array())) {
      Distractor d;
      d.seed = dj.at("seed").get<std::uint64_t>();
      d.width = dj.value("width", d.width);
      d.height = dj.value("height", d.height);
      d.start = dj.at("start").get<int>();
      d.end = dj.at("end").get<int>();
      d.from = pose_from_json(dj.at("from"));
      d.to = dj.contains("to") ? pose_from_json(dj.at("to")) : d.from;
      s.distractors.push_back(d);
    }
    return s;
  } catch (const json::exception& e) {
    throw ScriptError(std::string("malformed script: ") + e.what());
  }
}

json to_json(const SynthScript& s) {
  json j;
  j["seed"] = s.seed;
  j["width"] = s.width;
  j["height"] = s.height;
  j["n_frames"] = s.n_frames;
  j["cuts"] = s.cuts;
  j["background"] = {{"octaves", s.background.noise.octaves},
                     {"base_period", s.background.noise.base_period},
                     {"persistence", s.background.noise.persistence},
                     {"contrast", s.background.contrast},
                     {"pan", {s.background.pan_x, s.background.pan_y}},
                     {"noise_sigma", s.background.noise_sigma}};
  j["placements"] = json::array();
  for (const auto& p : s.placements) {
    json pj{{"target", p.target}, {"start", p.start}, {"end", p.end}, {"from", pose_to_json(p.from)},
            {"to", pose_to_json(p.to)}, {"occlusions", json::array()}};
    for (const auto& o : p.occlusions) {
      pj["occlusions"].push_back(
          {{"start", o.start}, {"end", o.end}, {"fraction", o.fraction}, {"side", side_name(o.side)}});
    }
    j["placements"].push_back(std::move(pj));
  }
  j["distractors"] = json::array();
  for (const auto& d : s.distractors) {
    j["distractors"].push_back({{"seed", d.seed},
                                {"width", d.width},
                                {"height", d.height},
                                {"start", d.start},
                                {"end", d.end},
                                {"from", pose_to_json(d.from)},
                                {"to", pose_to_json(d.to)}});
  }
  return j;
}

SynthScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("script not found: '" + path.string() + "'");
  try {
    return script_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ScriptError("cannot parse '" + path.string() + "': " + e.what());
  }
}

json to_json(const GroundTruth& truth) {
  json j;
  j["cuts"] = truth.cuts;
  j["intervals"] = json::array();
  for (const auto& iv : truth.intervals) j["intervals"].push_back({{"group", iv.group}, {"start", iv.start}, {"end", iv.end}});
  return j;
}

GroundTruth truth_from_json(const json& j) {
  try {
    GroundTruth t;
    t.cuts = j.value("cuts", std::vector<int>{});
    for (const json& iv : j.value("intervals", json::array())) {
      t.intervals.push_back({iv.at("group").get<std::string>(), iv.at("start").get<int>(), iv.at("end").get<int>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ground truth: ") + e.what());
  }
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("ground truth not found: '" + path.string() + "'");
  try {
    return truth_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InputError("cannot parse '" + path.string() + "': " + e.what());
  }
}

GroundTruth ground_truth(const SynthScript& script, const TargetLibrary& targets) {
  GroundTruth truth;
  truth.cuts = script.cuts;
  std::map<std::string, std::vector<std::pair<int, int>>> by_group;
  for (const auto& p : script.placements) {
    const auto g = targets.groups.find(p.target);
    by_group[g == targets.groups.end() ? p.target : g->second].emplace_back(p.start, p.end);
  }
  for (auto& [group, spans] : by_group) {
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<int, int>> merged;
    for (const auto& s : spans) {
      if (!merged.empty() && s.first <= merged.back().second + 1) {
        merged.back().second = std::max(merged.back().second, s.second);
      } else {
        merged.push_back(s);
      }
    }
    for (const auto& m : merged) truth.intervals.push_back({group, m.first, m.second});
  }
  return truth;
}

GrayImage render_frame(const SynthScript& script, const TargetLibrary& targets, int index) {
  const int scene = scene_of(script, index);
  const int scene_start = scene == 0 ? 0 : script.cuts[static_cast<std::size_t>(scene - 1)];
  const std::uint64_t scene_seed = derive_seed(script.seed, 1000 + static_cast<std::uint64_t>(scene));
  const double base_x = static_cast<double>(mix64(scene_seed) % 4096);
  const double base_y = static_cast<double>(mix64(scene_seed + 1) % 4096);
  const BackgroundParams& bg = script.background;

  FloatImage frame = value_noise(script.width, script.height, scene_seed, bg.noise,
                                 base_x + bg.pan_x * (index - scene_start), base_y + bg.pan_y * (index - scene_start));
  for (float& v : frame.pixels()) v = std::clamp(static_cast<float>(0.5 + (v - 0.5) * bg.contrast), 0.0f, 1.0f);

  for (const auto& d : script.distractors) {
    if (index < d.start || index > d.end) continue;
    const FloatImage sprite = to_float(make_target_image(d.width, d.height, d.seed));
    stamp(frame, sprite, pose_at(d.from, d.to, d.start, d.end, index), nullptr);
  }
  for (const auto& p : script.placements) {
    if (index < p.start || index > p.end) continue;
    const Occlusion* occ = nullptr;
    for (const auto& o : p.occlusions) {
      if (index >= o.start && index <= o.end) occ = &o;
    }
    const FloatImage sprite = to_float(targets.images.at(p.target));
    stamp(frame, sprite, pose_at(p.from, p.to, p.start, p.end, index), occ);
  }

  GrayImage out(script.width, script.height);
  std::uint64_t counter = derive_seed(script.seed, 5'000'000 + static_cast<std::uint64_t>(index));
  auto uniform = [&counter] { return (static_cast<double>(mix64(counter++) >> 11) + 0.5) * 0x1.0p-53; };
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = frame.pixels()[i] * 255.0;
    if (bg.noise_sigma > 0) {
      const double u1 = uniform();
      const double u2 = uniform();
      v += bg.noise_sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    out.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return out;
}

std::vector<GrayImage> render_frames(const SynthScript& script, const TargetLibrary& targets) {
  validate(script, targets);
  std::vector<GrayImage> frames(static_cast<std::size_t>(script.n_frames));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < script.n_frames; ++i) frames[static_cast<std::size_t>(i)] = render_frame(script, targets, i);
  return frames;
}

GroundTruth render(const SynthScript& script, const TargetLibrary& targets, const std::filesystem::path& out_dir) {
  validate(script, targets);
  std::filesystem::create_directories(out_dir);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < script.n_frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.png", i);
    write_png(out_dir / name, render_frame(script, targets, i));
  }
  const GroundTruth truth = ground_truth(script, targets);
  std::ofstream(out_dir / "ground_truth.json") << to_json(truth).dump(2) << '\n';
  return truth;
}

TargetLibrary make_target_library(int n, std::uint64_t seed, int width, int height) {
  TargetLibrary lib;
  for (int i = 0; i < n; ++i) {
    const std::string id = "t" + std::to_string(i);
    lib.images[id] = make_target_image(width, height, derive_seed(seed, static_cast<std::uint64_t>(i)));
    lib.groups[id] = "g" + std::to_string(i);
  }
  return lib;
}

std::filesystem::path write_target_library(const TargetLibrary& lib, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<TargetEntry> entries;
  for (const auto& [id, img] : lib.images) {
    write_png(dir / (id + ".png"), img);
    entries.push_back({id, lib.groups.at(id), id + ".png"});
  }
  const auto manifest = dir / "targets.txt";
  write_manifest(manifest, entries);
  return manifest;
}

SynthScript make_corpus_script(std::uint64_t seed, const TargetLibrary& targets, const CorpusParams& params) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SynthScript script;
  script.seed = seed;
  script.width = params.width;
  script.height = params.height;
  script.n_frames = params.n_frames;

  const int max_cuts = std::min(params.max_cuts, params.n_frames / params.min_scene - 1);
  const int n_cuts = std::max(0, integer(std::min(params.min_cuts, max_cuts), max_cuts));
  const int slack = params.n_frames - (n_cuts + 1) * params.min_scene;
  std::vector<int> offsets(static_cast<std::size_t>(n_cuts));
  for (int& o : offsets) o = integer(0, slack);
  std::sort(offsets.begin(), offsets.end());
  for (int k = 0; k < n_cuts; ++k) script.cuts.push_back((k + 1) * params.min_scene + offsets[static_cast<std::size_t>(k)]);

  std::vector<std::string> ids;
  for (const auto& [id, img] : targets.images) ids.push_back(id);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t next_id = 0;

  const double slot_w = params.width / 2.0;
  // Random pose of a w x h sprite inside slot `slot`, plus a drifted end pose.
  auto slot_poses = [&](int slot, int w, int h) {
    const double rot = uniform(-8.0, 8.0);
    const double rad = std::abs(rot) * std::numbers::pi / 180.0;
    const double fit = 0.95 * std::min(slot_w / (w * std::cos(rad) + h * std::sin(rad)),
                                       params.height / (w * std::sin(rad) + h * std::cos(rad)));
    const double hi = std::clamp(fit, 0.3, 1.0);
    const double lo = std::min(hi, 0.7);
    Pose from{slot_w * (slot + 0.5), 0, uniform(lo, hi), rot};
    Pose to{from.x, 0, std::clamp(from.scale + uniform(-0.08, 0.08), lo, hi), std::clamp(rot + uniform(-3, 3), -8.0, 8.0)};
    auto free_y = [&](const Pose& p) { return std::max(0.0, (params.height - warped_extent(w, h, p).second) / 2 - 1); };
    auto free_x = [&](const Pose& p) { return std::max(0.0, (slot_w - warped_extent(w, h, p).first) / 2 - 1); };
    from.y = params.height / 2.0 + uniform(-1, 1) * free_y(from);
    to.y = params.height / 2.0 + uniform(-1, 1) * free_y(to);
    from.x += uniform(-1, 1) * free_x(from);
    to.x += uniform(-1, 1) * free_x(to);
    return std::pair{from, to};
  };
  auto sub_interval = [&](int s, int e) {
    const int len = e - s + 1;
    if (len <= params.min_interval || uniform(0, 1) < 0.35) return std::pair{s, e};
    const int run = integer(params.min_interval, len);
    const int start = integer(s, e - run + 1);
    return std::pair{start, start + run - 1};
  };

  for (int scene = 0; scene <= n_cuts; ++scene) {
    const int s = scene == 0 ? 0 : script.cuts[static_cast<std::size_t>(scene - 1)];
    const int e = scene == n_cuts ? params.n_frames - 1 : script.cuts[static_cast<std::size_t>(scene)] - 1;
    for (int slot = 0; slot < 2; ++slot) {
      const double roll = uniform(0, 1);
      const auto [a, b] = sub_interval(s, e);
      if (roll < params.target_prob && !ids.empty()) {
        const std::string& id = ids[next_id++ % ids.size()];
        const GrayImage& img = targets.images.at(id);
        const auto [from, to] = slot_poses(slot, img.width(), img.height());
        Placement p{id, a, b, from, to, {}};
        if (b - a + 1 >= params.min_interval && uniform(0, 1) < 0.35) {
          const int olen = integer(3, (b - a + 1) / 2);
          const int ostart = integer(a, b - olen + 1);
          p.occlusions.push_back({ostart, ostart + olen - 1, uniform(0.2, params.max_occlusion),
                                  static_cast<Side>(integer(0, 3))});
        }
        script.placements.push_back(std::move(p));
      } else if (roll < params.target_prob + params.distractor_prob) {
        Distractor d;
        d.seed = rng();
        d.width = 144;
        d.height = 108;
        d.start = a;
        d.end = b;
        std::tie(d.from, d.to) = slot_poses(slot, d.width, d.height);
        script.distractors.push_back(d);
      }
    }
  }
  return script;
}

}  // namespace tislf::synth
