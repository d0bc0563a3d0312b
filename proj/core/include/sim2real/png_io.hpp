#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sim2real/types.hpp"

namespace sim2real {

struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};

// 8-bit PNG in any colour type; converted to RGB and divided by 255.
Image read_png_image(const std::filesystem::path& path);
// Rounds to 8 bits.
void write_png_image(const std::filesystem::path& path, const Image& image);
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> rgb);

Gray16 read_png_gray16(const std::filesystem::path& path);
void write_png_gray16(const std::filesystem::path& path, const Gray16& image);

// Depth PNG convention: millimetres = raw * scale_mm, raw 0 marks an invalid pixel.
DepthMap read_depth_png(const std::filesystem::path& path, double scale_mm);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale_mm);

}  // namespace sim2real
