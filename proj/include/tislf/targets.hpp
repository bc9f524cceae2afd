#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tislf {

/// One line of a targets manifest: `target_id group_id path`.
struct TargetEntry {
  std::string id;
  std::string group;
  std::filesystem::path path;  // resolved against the manifest's directory
};

/// Blank lines and `#` comments are skipped. Throws InputNotFound / InputError.
std::vector<TargetEntry> read_manifest(const std::filesystem::path& manifest);

void write_manifest(const std::filesystem::path& manifest, const std::vector<TargetEntry>& entries);

}  // namespace tislf
