#include "tislf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "tislf/errors.hpp"

namespace tislf {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

std::string format(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string format_int(T v) {
  return std::to_string(v);
}

struct Field {
  std::function<void(PipelineConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

// Getters only read through the reference, so the const_cast below never writes.
Field real(double& (*ref)(PipelineConfig&)) {
  return {[ref](PipelineConfig& c, std::string_view k, std::string_view v) { ref(c) = parse_number<double>(k, v); },
          [ref](const PipelineConfig& c) { return format(ref(const_cast<PipelineConfig&>(c))); }};
}

Field integer(int& (*ref)(PipelineConfig&)) {
  return {[ref](PipelineConfig& c, std::string_view k, std::string_view v) { ref(c) = parse_number<int>(k, v); },
          [ref](const PipelineConfig& c) { return format_int(ref(const_cast<PipelineConfig&>(c))); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"frames_dir",
       {[](PipelineConfig& c, std::string_view, std::string_view v) { c.ingest.frames_dir = std::string(v); },
        [](const PipelineConfig& c) { return c.ingest.frames_dir.string(); }}},
      {"effective_fps", real([](PipelineConfig& c) -> double& { return c.ingest.effective_fps; })},
      {"downsample_long_side", integer([](PipelineConfig& c) -> int& { return c.ingest.downsample_long_side; })},
      {"sift.octaves", integer([](PipelineConfig& c) -> int& { return c.features.octaves; })},
      {"sift.scales_per_octave", integer([](PipelineConfig& c) -> int& { return c.features.scales_per_octave; })},
      {"sift.contrast_thresh", real([](PipelineConfig& c) -> double& { return c.features.contrast_thresh; })},
      {"sift.edge_thresh", real([](PipelineConfig& c) -> double& { return c.features.edge_thresh; })},
      {"sift.max_keypoints", integer([](PipelineConfig& c) -> int& { return c.features.max_keypoints; })},
      {"match.ratio", real([](PipelineConfig& c) -> double& { return c.matcher.ratio; })},
      {"match.denominator",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          const auto d = parse_denominator(v);
          if (!d) throw ConfigError(std::string(k) + ": expected second, min or union, got '" + std::string(v) + "'");
          c.denominator = *d;
        },
        [](const PipelineConfig& c) { return std::string(to_string(c.denominator)); }}},
      {"ransac.epsilon_px", real([](PipelineConfig& c) -> double& { return c.matcher.epsilon_px; })},
      {"ransac.max_iters", integer([](PipelineConfig& c) -> int& { return c.matcher.max_iters; })},
      {"ransac.seed",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) { c.matcher.seed = parse_number<std::uint64_t>(k, v); },
        [](const PipelineConfig& c) { return format_int(c.matcher.seed); }}},
      {"cusum.delta",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          if (v == "auto") {
            c.cusum.delta.reset();
          } else {
            c.cusum.delta = parse_number<double>(k, v);
          }
        },
        [](const PipelineConfig& c) { return c.cusum.delta ? format(*c.cusum.delta) : std::string("auto"); }}},
      {"cusum.alpha", real([](PipelineConfig& c) -> double& { return c.cusum.alpha; })},
      {"cusum.warmup", integer([](PipelineConfig& c) -> int& { return c.cusum.warmup; })},
      {"cusum.rearm_low", real([](PipelineConfig& c) -> double& { return c.cusum.rearm_low; })},
      {"recognition.chunks", integer([](PipelineConfig& c) -> int& { return c.recognition.chunks; })},
      {"recognition.kl_thresh", real([](PipelineConfig& c) -> double& { return c.recognition.kl_thresh; })},
      {"recognition.min_mass", real([](PipelineConfig& c) -> double& { return c.recognition.min_mass; })},
      {"recognition.kmeans_gap", real([](PipelineConfig& c) -> double& { return c.recognition.kmeans_gap; })},
      {"estimation.t_stand", integer([](PipelineConfig& c) -> int& { return c.estimation.t_stand; })},
      {"estimation.t_lost", integer([](PipelineConfig& c) -> int& { return c.estimation.t_lost; })},
      {"estimation.beta", real([](PipelineConfig& c) -> double& { return c.estimation.beta; })},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(ingest.effective_fps > 0)) throw ConfigError("effective_fps must be > 0");
  if (ingest.downsample_long_side < 16) throw ConfigError("downsample_long_side must be >= 16");
  if (features.octaves < 1) throw ConfigError("sift.octaves must be >= 1");
  if (features.scales_per_octave < 1) throw ConfigError("sift.scales_per_octave must be >= 1");
  if (!(features.contrast_thresh > 0)) throw ConfigError("sift.contrast_thresh must be > 0");
  if (!(features.edge_thresh > 1)) throw ConfigError("sift.edge_thresh must be > 1");
  if (features.max_keypoints < 1) throw ConfigError("sift.max_keypoints must be >= 1");
  if (!(matcher.ratio > 0 && matcher.ratio <= 1)) throw ConfigError("match.ratio must lie in (0, 1]");
  if (!(matcher.epsilon_px > 0)) throw ConfigError("ransac.epsilon_px must be > 0");
  if (matcher.max_iters < 1) throw ConfigError("ransac.max_iters must be >= 1");
  cusum.validate();
  recognition.validate();
  estimation.validate();
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(config, key, value);
}

PipelineConfig parse_config(std::string_view text, const std::string& origin) {
  PipelineConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = (section.empty() ? "" : section + ".") + std::string(trim(line.substr(0, eq)));
    try {
      set_config_value(config, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("config not found: '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void apply_override(PipelineConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set_config_value(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::map<std::string, std::string> config_values(const PipelineConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(config);
  return out;
}

std::uint64_t config_hash(const PipelineConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : config_values(config)) {
    for (const char c : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace tislf
