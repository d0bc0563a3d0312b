#pragma once

#include <span>
#include <vector>

#include <torch/types.h>

#include "sim2real/types.hpp"

namespace sim2real {

// [B,3,H,W] float32; every image must share one size.
torch::Tensor images_to_tensor(std::span<const Image> images);
torch::Tensor image_to_tensor(const Image& image);
// [B,H,W] float32 depths (invalid entries zeroed) and [B,H,W] bool masks.
torch::Tensor depths_to_tensor(std::span<const DepthMap> depths);
torch::Tensor valid_to_tensor(std::span<const DepthMap> depths);

// Expects [3,H,W]; values are clamped into [0,1].
Image tensor_to_image(const torch::Tensor& chw);
// Expects [H,W]; all pixels valid.
DepthMap tensor_to_depth(const torch::Tensor& hw);

}  // namespace sim2real
