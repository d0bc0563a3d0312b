#include "sim2real/render.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "sim2real/error.hpp"
#include "sim2real/image_ops.hpp"
#include "sim2real/png_io.hpp"

namespace sim2real {

RgbCanvas::RgbCanvas(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw InputError(fmt::format("canvas size {}x{} is empty", w, h));
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = fill[0];
    rgb[i + 1] = fill[1];
    rgb[i + 2] = fill[2];
  }
}

void RgbCanvas::set(int x, int y, std::array<std::uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = c[0];
  rgb[i + 1] = c[1];
  rgb[i + 2] = c[2];
}

void RgbCanvas::blit(const RgbCanvas& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * src.width + x) * 3;
      set(x0 + x, y0 + y, {src.rgb[i], src.rgb[i + 1], src.rgb[i + 2]});
    }
  }
}

void RgbCanvas::save_png(const std::filesystem::path& path) const { write_png_rgb8(path, width, height, rgb); }

std::array<std::uint8_t, 3> viridis(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  static constexpr double c[7][3] = {
      {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
      {0.1050930431085774, 1.404613529898575, 1.384590162594685},
      {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
      {-4.634230498983486, -5.799100973351585, -19.33244095627987},
      {6.228269936347081, 14.17993336680509, 56.69055260068105},
      {4.776384997670288, -13.74514537774601, -65.35303263337234},
      {-5.435455855934631, 4.645852612178535, 26.3124352495832},
  };
  std::array<std::uint8_t, 3> out{};
  for (int k = 0; k < 3; ++k) {
    double v = c[6][k];
    for (int i = 5; i >= 0; --i) v = c[i][k] + t * v;
    out[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  return out;
}

namespace {

struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {' ', {0, 0, 0, 0, 0, 0, 0}},                      {'_', {0, 0, 0, 0, 0, 0, 0x1F}},
    {'-', {0, 0, 0, 0x1F, 0, 0, 0}},                   {'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
    {'>', {0x10, 0x08, 0x04, 0x02, 0x04, 0x08, 0x10}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'=', {0, 0, 0x1F, 0, 0x1F, 0, 0}},
    {':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},          {'/', {0, 0x01, 0x02, 0x04, 0x08, 0x10, 0}},
    {'+', {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0}},       {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0, 0x04}},
};

const Glyph& glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont) {
    if (g.ch == c) return g;
  }
  return kFont[std::size(kFont) - 1];
}

constexpr std::array<std::uint8_t, 3> kBackground{24, 24, 24};
constexpr std::array<std::uint8_t, 3> kText{235, 235, 235};
constexpr int kGap = 2;

}  // namespace

int text_width(const std::string& text, int scale) {
  return text.empty() ? 0 : static_cast<int>(text.size()) * 6 * scale - scale;
}

void draw_text(RgbCanvas& canvas, int x, int y, const std::string& text, int scale,
               std::array<std::uint8_t, 3> color) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph& g = glyph(text[i]);
    const int gx = x + static_cast<int>(i) * 6 * scale;
    for (int r = 0; r < 7; ++r) {
      for (int col = 0; col < 5; ++col) {
        if (!(g.rows[r] & (0x10 >> col))) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) canvas.set(gx + col * scale + sx, y + r * scale + sy, color);
        }
      }
    }
  }
}

RgbCanvas image_panel(const Image& image) {
  RgbCanvas c(image.width(), image.height(), kBackground);
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) c.rgb[i] = static_cast<std::uint8_t>(std::lround(px[i] * 255.0));
  return c;
}

RgbCanvas depth_panel(const DepthMap& depth, double vmin, double vmax) {
  RgbCanvas c(depth.width(), depth.height(), {0, 0, 0});
  const double span = vmax - vmin;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(y, x)) continue;
      const double t = span > 0.0 ? (depth.at(y, x) - vmin) / span : 0.5;
      c.set(x, y, viridis(t));
    }
  }
  return c;
}

RgbCanvas comparison_grid(const Image& input, const std::string& input_label,
                          const std::vector<std::pair<std::string, DepthMap>>& depths) {
  const int pw = input.width(), ph = input.height();
  std::vector<DepthMap> resized;
  double vmin = INFINITY, vmax = -INFINITY;
  for (const auto& [label, d] : depths) {
    resized.push_back(d.width() == pw && d.height() == ph ? d : resize_depth(d, pw, ph));
    const auto& r = resized.back();
    for (std::size_t i = 0; i < r.values().size(); ++i) {
      if (!r.valid_mask()[i]) continue;
      vmin = std::min(vmin, r.values()[i]);
      vmax = std::max(vmax, r.values()[i]);
    }
  }
  if (!std::isfinite(vmin)) vmin = vmax = 0.0;
  const int scale = std::max(1, pw / 96);
  const int strip = 7 * scale + 2 * kGap;
  const int n = 1 + static_cast<int>(depths.size());
  RgbCanvas grid(n * pw + (n + 1) * kGap, ph + strip + kGap, kBackground);
  auto place = [&](int col, const RgbCanvas& panel, std::string label) {
    const int x0 = kGap + col * (pw + kGap);
    const int max_chars = std::max(1, (pw + scale) / (6 * scale));
    if (static_cast<int>(label.size()) > max_chars) label.resize(static_cast<std::size_t>(max_chars));
    draw_text(grid, x0 + (pw - text_width(label, scale)) / 2, kGap, label, scale, kText);
    grid.blit(panel, x0, strip);
  };
  place(0, image_panel(input), input_label);
  for (std::size_t i = 0; i < depths.size(); ++i) {
    place(static_cast<int>(i) + 1, depth_panel(resized[i], vmin, vmax), depths[i].first);
  }
  return grid;
}

RgbCanvas histogram_heatmap(const JointHistogram& h, int cell_size) {
  if (cell_size < 1) throw InputError("cell_size must be >= 1");
  const int n = h.n_bins();
  double top = 0.0;
  for (double c : h.counts()) top = std::max(top, std::log1p(c));
  RgbCanvas out(n * cell_size, n * cell_size, {0, 0, 0});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto col = viridis(top > 0.0 ? std::log1p(h.count(i, j)) / top : 0.0);
      for (int sy = 0; sy < cell_size; ++sy) {
        for (int sx = 0; sx < cell_size; ++sx) out.set(j * cell_size + sx, i * cell_size + sy, col);
      }
    }
  }
  return out;
}

}  // namespace sim2real
