#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "tislf/estimation.hpp"
#include "tislf/features.hpp"
#include "tislf/frame_io.hpp"
#include "tislf/matcher.hpp"
#include "tislf/recognition.hpp"
#include "tislf/segmentation.hpp"

namespace tislf {

struct PipelineConfig {
  IngestConfig ingest;
  FeatureParams features;
  MatcherParams matcher;
  Denominator denominator = Denominator::Min;  // for the frame-to-frame W vector
  CusumParams cusum;
  RecognitionParams recognition;
  EstimationParams estimation;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Sets one key from its text form. Unknown keys and malformed values throw ConfigError.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines. `#` starts a comment; `[section]` prefixes the
/// following keys with `section.`. Validates the result.
PipelineConfig parse_config(std::string_view text, const std::string& origin = "<config>");

/// Missing file -> InputNotFound.
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies `key=value`. Does not re-validate.
void apply_override(PipelineConfig& config, std::string_view assignment);

/// Every key with its current value, in key order.
std::map<std::string, std::string> config_values(const PipelineConfig& config);

/// FNV-1a 64 over the canonical `key=value\n` listing.
std::uint64_t config_hash(const PipelineConfig& config);

}  // namespace tislf
