#include "tislf/targets.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tislf/errors.hpp"

namespace tislf {

std::vector<TargetEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw InputNotFound("targets manifest not found: '" + manifest.string() + "'");
  const auto base = manifest.parent_path();
  std::vector<TargetEntry> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    TargetEntry e;
    std::string path, extra;
    if (!(fields >> e.id)) continue;
    if (!(fields >> e.group >> path) || (fields >> extra)) {
      throw InputError(manifest.string() + ":" + std::to_string(lineno) + ": expected 'target_id group_id path'");
    }
    if (!ids.insert(e.id).second) {
      throw InputError(manifest.string() + ":" + std::to_string(lineno) + ": duplicate target id '" + e.id + "'");
    }
    e.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base / path;
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<TargetEntry>& entries) {
  std::ofstream out(manifest);
  if (!out) throw InputError("cannot write '" + manifest.string() + "'");
  for (const auto& e : entries) out << e.id << ' ' << e.group << ' ' << e.path.string() << '\n';
}

}  // namespace tislf
