#include "sim2real/networks.hpp"

#include <fmt/format.h>

#include "sim2real/error.hpp"

namespace sim2real {

namespace nn = torch::nn;

std::string_view to_string(Direction d) { return d == Direction::AtoB ? "A->B" : "B->A"; }

Direction direction_from_string(std::string_view s) {
  if (s == "A->B") return Direction::AtoB;
  if (s == "B->A") return Direction::BtoA;
  throw InputError(fmt::format("unknown translation direction '{}'", s));
}

namespace {

nn::Conv2d conv(int in, int out, int kernel, int stride, int padding) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding));
}

nn::InstanceNorm2d inorm(int channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels));
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int channels) {
  body_ = register_module(
      "body", nn::Sequential(nn::ReflectionPad2d(1), conv(channels, channels, 3, 1, 0),
                             inorm(channels), nn::ReLU(true), nn::ReflectionPad2d(1),
                             conv(channels, channels, 3, 1, 0), inorm(channels)));
  gain_ = register_parameter("gain", torch::zeros({1}));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  return x + gain_ * body_->forward(x);
}

GeneratorImpl::GeneratorImpl(Direction direction, const GeneratorOptions& options)
    : direction_(direction), options_(options) {
  if (options.base_width < 1 || options.n_res_blocks < 0) {
    throw InputError("generator width must be >= 1 and block count >= 0");
  }
  const int w = options.base_width;
  nn::Sequential seq;
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(conv(3, w, 7, 1, 0));
  seq->push_back(inorm(w));
  seq->push_back(nn::ReLU(true));
  seq->push_back(conv(w, 2 * w, 3, 2, 1));
  seq->push_back(inorm(2 * w));
  seq->push_back(nn::ReLU(true));
  seq->push_back(conv(2 * w, 4 * w, 3, 2, 1));
  seq->push_back(inorm(4 * w));
  seq->push_back(nn::ReLU(true));
  for (int i = 0; i < options.n_res_blocks; ++i) seq->push_back(ResidualBlock(4 * w));
  seq->push_back(nn::ConvTranspose2d(
      nn::ConvTranspose2dOptions(4 * w, 2 * w, 3).stride(2).padding(1).output_padding(1)));
  seq->push_back(inorm(2 * w));
  seq->push_back(nn::ReLU(true));
  seq->push_back(nn::ConvTranspose2d(
      nn::ConvTranspose2dOptions(2 * w, w, 3).stride(2).padding(1).output_padding(1)));
  seq->push_back(inorm(w));
  seq->push_back(nn::ReLU(true));
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(conv(w, 3, 7, 1, 0));
  seq->push_back(nn::Sigmoid());
  net_ = register_module("net", seq);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& images) {
  TORCH_CHECK(images.dim() == 4 && images.size(1) == 3, "generator expects [B,3,H,W]");
  const int64_t h = images.size(2), w = images.size(3);
  const int64_t pad_h = (4 - h % 4) % 4, pad_w = (4 - w % 4) % 4;
  auto x = images * 2.0 - 1.0;
  if (pad_h || pad_w) {
    x = torch::nn::functional::pad(
        x, torch::nn::functional::PadFuncOptions({0, pad_w, 0, pad_h}).mode(torch::kReflect));
  }
  auto y = net_->forward(x);
  if (pad_h || pad_w) y = y.slice(2, 0, h).slice(3, 0, w);
  return y;
}

DiscriminatorImpl::DiscriminatorImpl(char domain, const DiscriminatorOptions& options)
    : domain_(domain), options_(options) {
  if (options.base_width < 1) throw InputError("discriminator width must be >= 1");
  const int d = options.base_width;
  auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)); };
  net_ = register_module(
      "net", nn::Sequential(conv(3, d, 4, 2, 1), lrelu(),
                            conv(d, 2 * d, 4, 2, 1), inorm(2 * d), lrelu(),
                            conv(2 * d, 4 * d, 4, 2, 1), inorm(4 * d), lrelu(),
                            conv(4 * d, 8 * d, 4, 1, 1), inorm(8 * d), lrelu(),
                            conv(8 * d, 1, 4, 1, 1)));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& images) {
  TORCH_CHECK(images.dim() == 4 && images.size(1) == 3, "discriminator expects [B,3,H,W]");
  return net_->forward(images * 2.0 - 1.0);
}

}  // namespace sim2real
