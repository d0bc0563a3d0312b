#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sim2real/types.hpp"

namespace sim2real {

struct SequenceManifest {
  std::string sequence_id;
  std::vector<std::string> frames;  // in frame order; index in this list is the frame index
  std::vector<std::string> depths;  // parallel to frames, or empty
};

// One JSON document per dataset:
//   {dataset_name, domain: "A"|"B", depth_scale_mm, sequences: [{sequence_id, frames, depths?}]}
// Optional keys: width/height (expected decoded frame size), intrinsics (path to
// an intrinsics JSON), evaluation (true lets a domain-B set carry ground-truth
// depths for testing). Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::string dataset_name;
  Domain domain = Domain::A;
  double depth_scale_mm = 1.0;
  bool evaluation = false;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<std::string> intrinsics;
  std::vector<SequenceManifest> sequences;

  std::filesystem::path base_dir;  // not serialized

  bool has_depth() const;
  std::size_t frame_count() const;
  std::filesystem::path resolve(const std::string& relative) const;
  // Throws InputError when depth presence disagrees with the domain, sequence
  // ids repeat, or frame/depth lists have different lengths.
  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace sim2real
