#pragma once

#include <string_view>

#include <torch/torch.h>

namespace sim2real {

enum class Direction { AtoB, BtoA };
std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct GeneratorOptions {
  int base_width = 64;
  int n_res_blocks = 9;
};

struct DiscriminatorOptions {
  int base_width = 64;
};

// Conv/InstanceNorm/ReLU block pair with a learnable residual gain that starts
// at zero, so a freshly built block is the identity.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  torch::Tensor gain_;
};
TORCH_MODULE(ResidualBlock);

// Encoder (7x7 stem, two stride-2 convs), residual trunk, decoder (two
// transposed convs, 7x7 head). Input and output are [B,3,H,W] in [0,1]; the
// head is a sigmoid. Sizes not divisible by 4 are reflect-padded and cropped.
class GeneratorImpl : public torch::nn::Module {
 public:
  GeneratorImpl(Direction direction, const GeneratorOptions& options);
  torch::Tensor forward(const torch::Tensor& images);

  Direction direction() const { return direction_; }
  const GeneratorOptions& options() const { return options_; }

 private:
  Direction direction_;
  GeneratorOptions options_;
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(Generator);

// 4-layer PatchGAN. forward() returns one logit per patch, [B,1,h,w].
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(char domain, const DiscriminatorOptions& options);
  torch::Tensor forward(const torch::Tensor& images);

  char domain() const { return domain_; }
  const DiscriminatorOptions& options() const { return options_; }

 private:
  char domain_;
  DiscriminatorOptions options_;
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(Discriminator);

}  // namespace sim2real
