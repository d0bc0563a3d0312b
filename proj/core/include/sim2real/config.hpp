#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sim2real/dataio.hpp"
#include "sim2real/depthnet.hpp"
#include "sim2real/miloss.hpp"
#include "sim2real/translation.hpp"

namespace sim2real {

// Minimal TOML: [section] headers, key = value, # comments. Values are
// booleans, integers, floats, basic "strings" and (possibly multi-line)
// arrays of those. No nested tables, inline tables or dates.
struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string, std::vector<TomlValue>> data;

  std::string to_toml() const;
};

TomlValue parse_toml_value(const std::string& text);

class TomlDocument {
 public:
  static TomlDocument parse(const std::string& text, const std::string& source = "<config>");
  static TomlDocument load(const std::filesystem::path& path);

  // "section.key". Replaces an existing value or appends a new one.
  void set(const std::string& dotted_key, TomlValue value);
  // "section.key=value"; value text that does not parse as TOML is taken as a string.
  void apply_override(const std::string& assignment);
  const TomlValue* find(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

 private:
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, TomlValue>>>> sections_;
};

enum class AblationId { Baseline, Ours, OursCg, OursAltB };
std::string_view to_string(AblationId id);
AblationId ablation_from_string(std::string_view s);

struct DataConfig {
  bool preprocess = false;
  PreprocessSpec spec;
};

struct EvalConfig {
  std::uint64_t extractor_seed = 0;
  int kid_subset_size = 100;
  int kid_subsets = 10;
  int mi_bins = 64;
};

struct TranslateDatasetConfig {
  std::filesystem::path checkpoint;  // default: <output>/checkpoints/G.ckpt
  std::filesystem::path manifest;    // default: experiment domain_a
};

struct EvaluateConfig {
  std::filesystem::path checkpoint;  // empty: no depth evaluation unless inject_gt
  std::filesystem::path manifest;    // default: experiment eval_manifest
  bool inject_gt = false;            // use ground truth as the prediction (test mode)
  bool translation_metrics = false;
  std::filesystem::path images_real;     // folder of PNGs, or a feature CSV
  std::filesystem::path images_fake;
};

struct GridConfig {
  std::filesystem::path frames;     // manifest of input frames
  std::vector<std::string> models;  // "label=path" with a prediction manifest or depth checkpoint
  int max_frames = 0;               // 0: all
};

struct AblationConfig {
  std::vector<std::string> cells = {"baseline", "ours", "ours_cg"};
  std::vector<std::filesystem::path> alt_domain_b;  // one ours_altB cell each
  std::vector<std::uint64_t> seeds;                 // empty: experiment seed only
  bool parallel = false;
};

struct ToyConfig {
  int pairs = 64;
  int resolution = 64;
  int eval_frames = 32;
};

struct ExperimentConfig {
  std::string name = "experiment";
  AblationId ablation_id = AblationId::Ours;
  std::filesystem::path domain_a;
  std::filesystem::path domain_b;
  std::filesystem::path eval_manifest;
  std::filesystem::path output_dir = "run";
  std::uint64_t seed = 0;

  DataConfig data;
  TranslationTrainConfig translation;
  int translation_checkpoint_every = 1;
  DepthTrainConfig depth;
  std::filesystem::path depth_train_manifest;  // default: translated set, or domain_a for baseline
  double depth_strict_max_mse = 100.0;          // --strict threshold on the final epoch's mean MSE
  int depth_checkpoint_every = 1;
  HistogramSpec histogram;
  EvalConfig eval;
  TranslateDatasetConfig translate_dataset;
  EvaluateConfig evaluate;
  GridConfig grid;
  AblationConfig ablation;
  ToyConfig toy;

  // Pushes shared settings (seed, histogram, ablation rules) into the stage
  // configs and validates everything.
  void finalize();
};

// Reads every known key; unknown keys are an InputError. Relative paths
// resolve against base_dir; a relative output_dir resolves against the
// S2R_OUTPUT_ROOT environment variable when set, else the working directory.
ExperimentConfig experiment_from_toml(const TomlDocument& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {});

// Complete snapshot with absolute paths; loading it reproduces the config.
std::string to_toml(const ExperimentConfig& config);

// FNV-1a 64 of the snapshot text without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace sim2real
