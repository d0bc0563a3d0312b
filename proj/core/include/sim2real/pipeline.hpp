#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <fmt/format.h>
#include <fstream>
#include <mutex>

#include "sim2real/config.hpp"
#include "sim2real/depthnet.hpp"
#include "sim2real/error.hpp"
#include "sim2real/eval.hpp"
#include "sim2real/translation.hpp"

namespace sim2real {

// --strict depth training ended above the configured loss threshold.
class StrictCheckFailed : public Error {
 public:
  using Error::Error;
};

// <root>/{checkpoints,images,metrics,logs}/ and <root>/config.resolved.toml.
struct RunDir {
  std::filesystem::path root;

  static RunDir create(const std::filesystem::path& root);
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path images() const { return root / "images"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path snapshot() const { return root / "config.resolved.toml"; }
};

// Appends "[HH:MM:SS] [name] level: message" lines to a file and, unless
// quiet, to stderr.
class RunLog {
 public:
  RunLog(std::string name, const std::filesystem::path& file, bool echo);

  template <typename... Args>
  void info(fmt::format_string<Args...> f, Args&&... args) {
    write("info", fmt::format(f, std::forward<Args>(args)...));
  }
  template <typename... Args>
  void warn(fmt::format_string<Args...> f, Args&&... args) {
    write("warning", fmt::format(f, std::forward<Args>(args)...));
  }
  template <typename... Args>
  void error(fmt::format_string<Args...> f, Args&&... args) {
    write("error", fmt::format(f, std::forward<Args>(args)...));
  }

 private:
  void write(const char* level, const std::string& message);

  std::string name_;
  std::ofstream out_;
  bool echo_;
  std::mutex mutex_;
};

// Creates the run directory, writes the snapshot and opens logs/<command>.log.
struct CommandContext {
  RunDir run;
  std::shared_ptr<RunLog> log;
};
CommandContext begin_command(const ExperimentConfig& config, const std::string& command, bool quiet = false);

struct ToyDataOutputs {
  std::filesystem::path domain_a;
  std::filesystem::path domain_b;
  std::filesystem::path eval;
  std::filesystem::path experiment;  // ready-to-run toy experiment config
};
// Renders toy.pairs domain-A pairs, toy.pairs domain-B frames and
// toy.eval_frames held-out style-B frames with depth into output_dir.
ToyDataOutputs cmd_toy_data(const ExperimentConfig& config, bool quiet = false);

struct TrainTranslateOptions {
  bool dump_histograms = false;  // joint-histogram heat maps at each checkpoint epoch
  bool quiet = false;
};
// Checkpoints land in checkpoints/{G,F,D_A,D_B}.ckpt plus *_epochNNN.ckpt.
TranslationResult cmd_train_translate(const ExperimentConfig& config, const TrainTranslateOptions& options = {});

// Translates every frame of translate_dataset.manifest (default domain_a)
// with an A->B generator. Writes images/translated/ and translated.json,
// which keeps the original depth paths.
std::filesystem::path cmd_translate_dataset(ExperimentConfig config, bool quiet = false);

struct TrainDepthOptions {
  bool resume = false;  // continue from checkpoints/depth.ckpt
  bool strict = false;  // fail when the last epoch's mean MSE exceeds depth.strict_max_mse
  bool quiet = false;
};
DepthTrainResult cmd_train_depth(ExperimentConfig config, const TrainDepthOptions& options = {});

// Writes metrics/metrics.json, metrics/per_frame.csv and, when depth is
// evaluated, predictions as 16-bit PNGs with images/predictions.json.
nlohmann::json cmd_evaluate(ExperimentConfig config, bool quiet = false);

// One grid PNG per frame in images/grids/. Returns the number written.
int cmd_compare_grid(const ExperimentConfig& config, bool quiet = false);

struct AblationRow {
  std::string cell;
  std::string ablation_id;
  std::uint64_t seed = 0;
  double lambda_mi = 0.0;
  std::string domain_b;
  std::string status = "ok";
  std::string error;
  DepthMetrics depth;
  double mi_hard = 0.0;  // mean hard MI(depth, training-image intensity) at eval.mi_bins
  double fid_b = 0.0;    // FID(domain B, training images)
  double kid_b_mean = 0.0;
  double kid_b_std = 0.0;
};
// Runs every (seed, cell) through translation, depth training and evaluation
// under output_dir/cells/<cell>_s<seed>/. Failed cells are recorded and the
// suite continues. Writes metrics/ablation.csv and metrics/ablation.json.
std::vector<AblationRow> cmd_ablation_suite(const ExperimentConfig& config, bool quiet = false);

nlohmann::json to_json(const AblationRow& row);

// Sorted *.png files below a directory.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace sim2real
