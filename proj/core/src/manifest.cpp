#include "sim2real/manifest.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"

namespace sim2real {

using nlohmann::json;

bool DatasetManifest::has_depth() const {
  for (const auto& s : sequences) {
    if (!s.depths.empty()) return true;
  }
  return false;
}

std::size_t DatasetManifest::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

std::filesystem::path DatasetManifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const {
  if (!std::isfinite(depth_scale_mm) || depth_scale_mm <= 0.0) {
    throw InputError(fmt::format("manifest '{}': depth_scale_mm must be positive", dataset_name));
  }
  std::set<std::string> ids;
  for (const auto& s : sequences) {
    if (!ids.insert(s.sequence_id).second) {
      throw InputError(fmt::format("manifest '{}': duplicate sequence_id '{}'", dataset_name,
                                   s.sequence_id));
    }
    const bool depth_allowed = domain == Domain::A || evaluation;
    if (domain == Domain::A && s.depths.empty()) {
      throw InputError(fmt::format("manifest '{}': domain-A sequence '{}' has no depths",
                                   dataset_name, s.sequence_id));
    }
    if (!depth_allowed && !s.depths.empty()) {
      throw InputError(fmt::format("manifest '{}': domain-B sequence '{}' must not carry depths",
                                   dataset_name, s.sequence_id));
    }
    if (!s.depths.empty() && s.depths.size() != s.frames.size()) {
      throw InputError(fmt::format("manifest '{}': sequence '{}' has {} frames but {} depths",
                                   dataset_name, s.sequence_id, s.frames.size(), s.depths.size()));
    }
  }
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["dataset_name"] = m.dataset_name;
  j["domain"] = std::string(to_string(m.domain));
  j["depth_scale_mm"] = m.depth_scale_mm;
  if (m.evaluation) j["evaluation"] = true;
  if (m.width) j["width"] = *m.width;
  if (m.height) j["height"] = *m.height;
  if (m.intrinsics) j["intrinsics"] = *m.intrinsics;
  j["sequences"] = json::array();
  for (const auto& s : m.sequences) {
    json js{{"sequence_id", s.sequence_id}, {"frames", s.frames}};
    if (!s.depths.empty()) js["depths"] = s.depths;
    j["sequences"].push_back(std::move(js));
  }
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("manifest is not valid JSON: {}", e.what()));
  }
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.domain = domain_from_string(j.at("domain").get<std::string>());
    m.depth_scale_mm = j.value("depth_scale_mm", 1.0);
    m.evaluation = j.value("evaluation", false);
    if (j.contains("width")) m.width = j["width"].get<int>();
    if (j.contains("height")) m.height = j["height"].get<int>();
    if (j.contains("intrinsics")) m.intrinsics = j["intrinsics"].get<std::string>();
    for (const auto& js : j.at("sequences")) {
      SequenceManifest s;
      s.sequence_id = js.at("sequence_id").get<std::string>();
      s.frames = js.at("frames").get<std::vector<std::string>>();
      if (js.contains("depths")) s.depths = js["depths"].get<std::vector<std::string>>();
      m.sequences.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed manifest: {}", e.what()));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read manifest '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str(), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  write_text_atomic(path, manifest_to_json(manifest));
}

}  // namespace sim2real
