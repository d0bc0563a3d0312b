#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sim2real/miloss.hpp"
#include "sim2real/types.hpp"

namespace sim2real {

struct RgbCanvas {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbCanvas() = default;
  RgbCanvas(int w, int h, std::array<std::uint8_t, 3> fill);
  void set(int x, int y, std::array<std::uint8_t, 3> c);
  void blit(const RgbCanvas& src, int x0, int y0);
  void save_png(const std::filesystem::path& path) const;
};

// Polynomial fit of matplotlib's viridis; t is clamped to [0,1].
std::array<std::uint8_t, 3> viridis(double t);

// 5x7 bitmap text. Lower case renders as upper case; unknown glyphs as '?'.
void draw_text(RgbCanvas& canvas, int x, int y, const std::string& text, int scale,
               std::array<std::uint8_t, 3> color);
int text_width(const std::string& text, int scale);

RgbCanvas image_panel(const Image& image);
// Linear viridis map of [vmin, vmax]; invalid pixels are black.
RgbCanvas depth_panel(const DepthMap& depth, double vmin, double vmax);

// Input image followed by one colour-mapped panel per depth map, each under
// its label. All depth panels share the row's valid min/max. Depths of a
// different size are resized to the input size.
RgbCanvas comparison_grid(const Image& input, const std::string& input_label,
                          const std::vector<std::pair<std::string, DepthMap>>& depths);

// log(1 + count) heat map, depth bins along y (top = near), intensity along x.
RgbCanvas histogram_heatmap(const JointHistogram& h, int cell_size = 2);

}  // namespace sim2real
