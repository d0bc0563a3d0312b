#include "sim2real/depthnet.hpp"

#include <cmath>
#include <fmt/format.h>

#include "sim2real/checkpoint.hpp"
#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"
#include "sim2real/image_ops.hpp"
#include "sim2real/tensor_convert.hpp"

namespace sim2real {

namespace nn = torch::nn;
namespace F = torch::nn::functional;
using nlohmann::json;

namespace {

nn::Conv2d conv(int in, int out, int kernel, int stride, int padding, bool bias = false) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

}  // namespace

BasicBlockImpl::BasicBlockImpl(int in_channels, int out_channels, int stride) {
  conv1_ = register_module("conv1", conv(in_channels, out_channels, 3, stride, 1));
  bn1_ = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2_ = register_module("conv2", conv(out_channels, out_channels, 3, 1, 1));
  bn2_ = register_module("bn2", nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    downsample_ = register_module(
        "downsample", nn::Sequential(conv(in_channels, out_channels, 1, stride, 0),
                                     nn::BatchNorm2d(out_channels)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn1_->forward(conv1_->forward(x)));
  y = bn2_->forward(conv2_->forward(y));
  const auto skip = downsample_ ? downsample_->forward(x) : x;
  return torch::relu(y + skip);
}

DepthModelImpl::DepthModelImpl(const DepthModelOptions& options) : options_(options) {
  if (options.blocks.empty() || options.base_width < 1) {
    throw InputError("depth model needs at least one encoder stage and width >= 1");
  }
  for (int b : options.blocks) {
    if (b < 1) throw InputError("every encoder stage needs at least one block");
  }
  if (!(options.label_scale > 0.0) || !(options.min_depth_mm > 0.0)) {
    throw InputError("label_scale and min_depth_mm must be positive");
  }
  const int w = options.base_width;
  stem_ = register_module("stem", nn::Sequential(conv(3, w, 7, 2, 3), nn::BatchNorm2d(w), nn::ReLU(true)));

  // Encoder channel count per feature level: stem, then each stage.
  std::vector<int> enc_channels{w};
  stages_ = register_module("stages", nn::ModuleList());
  int in = w;
  for (std::size_t s = 0; s < options.blocks.size(); ++s) {
    const int out = w << s;
    nn::Sequential stage;
    for (int b = 0; b < options.blocks[s]; ++b) {
      stage->push_back(BasicBlock(b == 0 ? in : out, out, (b == 0 && s > 0) ? 2 : 1));
    }
    stages_->push_back(stage);
    enc_channels.push_back(out);
    in = out;
  }

  // One decoder level per encoder feature, deepest first.
  up_convs_ = register_module("up_convs", nn::ModuleList());
  fuse_convs_ = register_module("fuse_convs", nn::ModuleList());
  const int levels = static_cast<int>(enc_channels.size());
  int x_ch = enc_channels.back();
  for (int l = levels - 1; l >= 0; --l) {
    const int dec_ch = std::max(4, (w / 4) << l);
    up_convs_->push_back(nn::Sequential(conv(x_ch, dec_ch, 3, 1, 1, true), nn::ELU()));
    const int skip_ch = l > 0 ? enc_channels[static_cast<std::size_t>(l - 1)] : 0;
    fuse_convs_->push_back(nn::Sequential(conv(dec_ch + skip_ch, dec_ch, 3, 1, 1, true), nn::ELU()));
    x_ch = dec_ch;
  }
  head_ = register_module("head", conv(x_ch, 1, 3, 1, 1, true));
}

torch::Tensor DepthModelImpl::forward(const torch::Tensor& images) {
  TORCH_CHECK(images.dim() == 4 && images.size(1) == 3, "depth model expects [B,3,H,W]");
  const int64_t h = images.size(2), w = images.size(3);
  auto x = (images - 0.45) / 0.225;
  std::vector<torch::Tensor> feats;
  x = stem_->forward(x);
  feats.push_back(x);
  x = F::max_pool2d(x, F::MaxPool2dFuncOptions(3).stride(2).padding(1));
  for (const auto& stage : *stages_) {
    x = stage->as<nn::Sequential>()->forward(x);
    feats.push_back(x);
  }
  const int levels = static_cast<int>(feats.size());
  for (int i = 0; i < levels; ++i) {
    const int l = levels - 1 - i;
    x = up_convs_[static_cast<std::size_t>(i)]->as<nn::Sequential>()->forward(x);
    std::vector<int64_t> size = l > 0 ? std::vector<int64_t>{feats[static_cast<std::size_t>(l - 1)].size(2),
                                                             feats[static_cast<std::size_t>(l - 1)].size(3)}
                                      : std::vector<int64_t>{h, w};
    x = F::interpolate(x, F::InterpolateFuncOptions().size(size).mode(torch::kNearest));
    if (l > 0) x = torch::cat({x, feats[static_cast<std::size_t>(l - 1)]}, 1);
    x = fuse_convs_[static_cast<std::size_t>(i)]->as<nn::Sequential>()->forward(x);
  }
  const auto raw = head_->forward(x).squeeze(1);
  return options_.label_scale * F::softplus(raw) + options_.min_depth_mm;
}

void DepthTrainConfig::validate() const {
  if (epochs < 1) throw RangeError(fmt::format("epochs must be >= 1, got {}", epochs));
  if (!(learning_rate > 0.0)) throw RangeError("learning_rate must be > 0");
  if (batch_size < 1) throw RangeError("batch_size must be >= 1");
  if (inference_width < kMinImageSide || inference_height < kMinImageSide) {
    throw RangeError("inference size is too small");
  }
  if (augmentation.crop_size < kMinImageSide) throw RangeError("crop_size is too small");
}

json to_json(const DepthTrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"batch_size", c.batch_size},
              {"crop_size", c.augmentation.crop_size},
              {"hflip", c.augmentation.allow_hflip},
              {"vflip", c.augmentation.allow_vflip},
              {"inference_width", c.inference_width},
              {"inference_height", c.inference_height},
              {"seed", c.seed},
              {"blocks", c.model.blocks},
              {"base_width", c.model.base_width},
              {"label_scale", c.model.label_scale},
              {"min_depth_mm", c.model.min_depth_mm}};
}

DepthTrainConfig depth_config_from_json(const json& j) {
  DepthTrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.augmentation.crop_size = j.value("crop_size", c.augmentation.crop_size);
  c.augmentation.allow_hflip = j.value("hflip", c.augmentation.allow_hflip);
  c.augmentation.allow_vflip = j.value("vflip", c.augmentation.allow_vflip);
  c.inference_width = j.value("inference_width", c.inference_width);
  c.inference_height = j.value("inference_height", c.inference_height);
  c.seed = j.value("seed", c.seed);
  c.augmentation.seed = c.seed;
  c.model.blocks = j.value("blocks", c.model.blocks);
  c.model.base_width = j.value("base_width", c.model.base_width);
  c.model.label_scale = j.value("label_scale", c.model.label_scale);
  c.model.min_depth_mm = j.value("min_depth_mm", c.model.min_depth_mm);
  return c;
}

void write_depth_curve_csv(const std::filesystem::path& path, std::span<const DepthLossRecord> curve) {
  std::string out = "epoch,step,mse\n";
  for (const auto& r : curve) out += fmt::format("{},{},{:.9g}\n", r.epoch, r.step, r.mse);
  write_text_atomic(path, out);
}

torch::Tensor masked_mse(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& valid) {
  const auto m = valid.to(pred.scalar_type());
  const auto n = m.sum();
  TORCH_CHECK(n.item<double>() > 0.0, "masked_mse needs at least one valid pixel");
  return ((pred - target).pow(2) * m).sum() / n;
}

void save_depth_checkpoint(const std::filesystem::path& path, const DepthTrainState& state,
                           const DepthTrainConfig& config) {
  Checkpoint ck;
  ck.kind = "depth_model";
  ck.meta = {{"epoch", state.epochs_done}, {"config", to_json(config)}};
  add_module_state(ck, *state.model, "model.");
  if (state.optimizer) add_adam_state(ck, *state.optimizer, state.model->parameters(), "adam.");
  save_checkpoint(ck, path);
}

LoadedDepthModel load_depth_checkpoint(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "depth_model") {
    throw InputError(fmt::format("'{}' holds a {} checkpoint, not a depth model", path.string(), ck.kind));
  }
  LoadedDepthModel out;
  out.config = depth_config_from_json(ck.meta.at("config"));
  out.epochs_done = ck.meta.value("epoch", 0);
  out.model = DepthModel(out.config.model);
  load_module_state(*out.model, ck, "model.");
  return out;
}

DepthTrainResult train_depth(const DepthTrainConfig& config, std::span<const PairedSample> pairs,
                             const DepthEpochCallback& on_epoch,
                             const std::optional<std::filesystem::path>& resume_from) {
  config.validate();
  if (pairs.empty()) throw InputError("depth training needs at least one pair");
  for (const auto& p : pairs) validate_pair(p);

  torch::manual_seed(config.seed);
  DepthTrainState state;
  state.model = DepthModel(config.model);
  state.optimizer = std::make_unique<torch::optim::Adam>(
      state.model->parameters(),
      torch::optim::AdamOptions(config.learning_rate).betas(std::make_tuple(config.beta1, config.beta2)));
  if (resume_from) {
    const Checkpoint ck = load_checkpoint(*resume_from);
    if (ck.kind != "depth_model") throw InputError("resume checkpoint is not a depth model");
    load_module_state(*state.model, ck, "model.");
    load_adam_state(*state.optimizer, state.model->parameters(), ck, "adam.");
    state.epochs_done = ck.meta.value("epoch", 0);
  }

  DepthTrainResult result;
  AugmentationSpec aug = config.augmentation;
  const int crop = std::min({aug.crop_size, pairs.front().image.height(), pairs.front().image.width()});
  aug.crop_size = crop;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = state.epochs_done + 1; epoch <= config.epochs; ++epoch) {
    // Per-epoch stream so a resumed run draws what an uninterrupted one would.
    Rng rng = Rng(config.seed).fork(static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    state.model->train();
    int step = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<Image> imgs;
      std::vector<DepthMap> deps;
      for (std::size_t k = start; k < end; ++k) {
        PairedSample s = augment(pairs[order[k]], aug, rng);
        imgs.push_back(std::move(s.image));
        deps.push_back(std::move(s.depth));
      }
      const auto x = images_to_tensor(imgs);
      const auto target = depths_to_tensor(deps);
      const auto valid = valid_to_tensor(deps);
      if (valid.sum().item<int64_t>() == 0) continue;
      state.optimizer->zero_grad();
      const auto loss = masked_mse(state.model->forward(x), target, valid);
      const double v = loss.item<double>();
      if (!std::isfinite(v)) {
        throw NonFiniteLoss(fmt::format("depth loss became non-finite at epoch {} step {}", epoch, step));
      }
      loss.backward();
      state.optimizer->step();
      result.curve.push_back({epoch, step++, v});
    }
    state.epochs_done = epoch;
    if (on_epoch) on_epoch(epoch, state);
  }
  result.model = state.model;
  result.epochs_done = state.epochs_done;
  return result;
}

DepthMap predict_depth(DepthModel& model, const Image& image, int inference_width, int inference_height) {
  torch::NoGradGuard no_grad;
  model->eval();
  const Image resized = resize_bilinear(image, inference_width, inference_height);
  const auto pred = model->forward(image_to_tensor(resized))[0];
  const DepthMap at_inference = tensor_to_depth(pred);
  return resize_depth(at_inference, image.width(), image.height());
}

}  // namespace sim2real
