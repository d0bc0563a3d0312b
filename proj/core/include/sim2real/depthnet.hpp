#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "sim2real/dataio.hpp"
#include "sim2real/types.hpp"

namespace sim2real {

struct DepthModelOptions {
  // Basic residual blocks per encoder stage; {3,4,6,3} is the 34-layer layout.
  std::vector<int> blocks = {3, 4, 6, 3};
  int base_width = 64;
  // Output is label_scale * softplus(raw) + min_depth_mm, in millimetres.
  double label_scale = 100.0;
  double min_depth_mm = 1e-3;
};

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in_channels, int out_channels, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
  torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(BasicBlock);

// Residual encoder (7x7 stem, max-pool, one stage per entry of blocks) and a
// decoder that upsamples back to the input size, concatenating the encoder
// feature of matching resolution at each scale. Maps [B,3,H,W] images in [0,1]
// to [B,H,W] strictly positive depths.
class DepthModelImpl : public torch::nn::Module {
 public:
  explicit DepthModelImpl(const DepthModelOptions& options);
  torch::Tensor forward(const torch::Tensor& images);
  const DepthModelOptions& options() const { return options_; }

 private:
  DepthModelOptions options_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::ModuleList stages_{nullptr};
  torch::nn::ModuleList up_convs_{nullptr};
  torch::nn::ModuleList fuse_convs_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(DepthModel);

struct DepthTrainConfig {
  int epochs = 20;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 4;
  AugmentationSpec augmentation{256, true, true, 0};
  int inference_width = 256;
  int inference_height = 256;
  std::uint64_t seed = 0;
  DepthModelOptions model;

  void validate() const;
};

nlohmann::json to_json(const DepthTrainConfig& c);
DepthTrainConfig depth_config_from_json(const nlohmann::json& j);

struct DepthLossRecord {
  int epoch = 0;
  int step = 0;
  double mse = 0.0;
};

void write_depth_curve_csv(const std::filesystem::path& path, std::span<const DepthLossRecord> curve);

// Mean squared error (mm^2) over valid pixels.
torch::Tensor masked_mse(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& valid);

struct DepthTrainState {
  DepthModel model{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer;
  int epochs_done = 0;
};

struct DepthTrainResult {
  DepthModel model{nullptr};
  std::vector<DepthLossRecord> curve;
  int epochs_done = 0;
};

using DepthEpochCallback = std::function<void(int epoch, DepthTrainState&)>;

// Trains on (image, depth) pairs with joint crop/flip augmentation. When a
// resume checkpoint is given, model and optimizer state are restored and the
// epoch counter continues from it (config.epochs is the final epoch).
DepthTrainResult train_depth(const DepthTrainConfig& config, std::span<const PairedSample> pairs,
                             const DepthEpochCallback& on_epoch = {},
                             const std::optional<std::filesystem::path>& resume_from = std::nullopt);

// Resizes to the inference size, predicts, resizes back. Output is strictly
// positive, all pixels valid, same size as the input.
DepthMap predict_depth(DepthModel& model, const Image& image, int inference_width, int inference_height);

void save_depth_checkpoint(const std::filesystem::path& path, const DepthTrainState& state,
                           const DepthTrainConfig& config);
struct LoadedDepthModel {
  DepthModel model{nullptr};
  DepthTrainConfig config;
  int epochs_done = 0;
};
LoadedDepthModel load_depth_checkpoint(const std::filesystem::path& path);

}  // namespace sim2real
