#include "sim2real/tensor_convert.hpp"

#include <fmt/format.h>

#include <torch/torch.h>

#include "sim2real/error.hpp"

namespace sim2real {

torch::Tensor images_to_tensor(std::span<const Image> images) {
  if (images.empty()) throw InputError("empty image batch");
  const int h = images.front().height(), w = images.front().width();
  auto out = torch::empty({static_cast<int64_t>(images.size()), 3, h, w}, torch::kFloat32);
  auto acc = out.accessor<float, 4>();
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Image& im = images[b];
    if (im.height() != h || im.width() != w) {
      throw DimensionMismatch(fmt::format("batch mixes {}x{} and {}x{} images", w, h, im.width(),
                                          im.height()));
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) acc[b][c][y][x] = static_cast<float>(im.at(y, x, c));
      }
    }
  }
  return out;
}

torch::Tensor image_to_tensor(const Image& image) {
  return images_to_tensor(std::span<const Image>(&image, 1));
}

torch::Tensor depths_to_tensor(std::span<const DepthMap> depths) {
  if (depths.empty()) throw InputError("empty depth batch");
  const int h = depths.front().height(), w = depths.front().width();
  auto out = torch::zeros({static_cast<int64_t>(depths.size()), h, w}, torch::kFloat32);
  auto acc = out.accessor<float, 3>();
  for (std::size_t b = 0; b < depths.size(); ++b) {
    const DepthMap& d = depths[b];
    if (d.height() != h || d.width() != w) throw DimensionMismatch("depth batch mixes sizes");
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (d.valid(y, x)) acc[b][y][x] = static_cast<float>(d.at(y, x));
      }
    }
  }
  return out;
}

torch::Tensor valid_to_tensor(std::span<const DepthMap> depths) {
  if (depths.empty()) throw InputError("empty depth batch");
  const int h = depths.front().height(), w = depths.front().width();
  auto out = torch::zeros({static_cast<int64_t>(depths.size()), h, w}, torch::kBool);
  auto acc = out.accessor<bool, 3>();
  for (std::size_t b = 0; b < depths.size(); ++b) {
    const DepthMap& d = depths[b];
    if (d.height() != h || d.width() != w) throw DimensionMismatch("depth batch mixes sizes");
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) acc[b][y][x] = d.valid(y, x);
    }
  }
  return out;
}

Image tensor_to_image(const torch::Tensor& chw) {
  TORCH_CHECK(chw.dim() == 3 && chw.size(0) == 3, "expected a [3,H,W] tensor");
  const auto t = chw.detach().to(torch::kFloat64).clamp(0.0, 1.0).contiguous();
  const int h = static_cast<int>(t.size(1)), w = static_cast<int>(t.size(2));
  auto acc = t.accessor<double, 3>();
  std::vector<double> px(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc[c][y][x];
    }
  }
  return Image(h, w, std::move(px));
}

DepthMap tensor_to_depth(const torch::Tensor& hw) {
  TORCH_CHECK(hw.dim() == 2, "expected a [H,W] tensor");
  const auto t = hw.detach().to(torch::kFloat64).contiguous();
  const int h = static_cast<int>(t.size(0)), w = static_cast<int>(t.size(1));
  std::vector<double> v(t.data_ptr<double>(), t.data_ptr<double>() + t.numel());
  return DepthMap(h, w, std::move(v));
}

}  // namespace sim2real
