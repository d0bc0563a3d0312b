#include "sim2real/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "sim2real/error.hpp"

namespace sim2real {

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[d] = {i0, i1, s - i0};
  }
  return taps;
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

void check_resize(int w, int h) {
  if (w < kMinImageSide || h < kMinImageSide) {
    throw InputError(fmt::format("resize target {}x{} is below the minimum side {}", w, h,
                                 kMinImageSide));
  }
}

void check_crop(int img_h, int img_w, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || h <= 0 || w <= 0 || top + h > img_h || left + w > img_w) {
    throw InputError(fmt::format("crop {}x{} at ({}, {}) does not fit in a {}x{} frame", w, h,
                                 left, top, img_w, img_h));
  }
}

}  // namespace

Image resize_bilinear(const Image& image, int out_width, int out_height) {
  check_resize(out_width, out_height);
  if (out_width == image.width() && out_height == image.height()) return image;
  const auto tx = make_taps(image.width(), out_width);
  const auto ty = make_taps(image.height(), out_height);
  std::vector<double> out(static_cast<std::size_t>(out_width) * out_height * 3);
  for (int y = 0; y < out_height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < 3; ++c) {
        // lerp form keeps constant regions bit-exact
        const double top = lerp(image.at(a.i0, b.i0, c), image.at(a.i0, b.i1, c), b.w1);
        const double bot = lerp(image.at(a.i1, b.i0, c), image.at(a.i1, b.i1, c), b.w1);
        out[(static_cast<std::size_t>(y) * out_width + x) * 3 + c] =
            std::clamp(lerp(top, bot, a.w1), 0.0, 1.0);
      }
    }
  }
  return Image(out_height, out_width, std::move(out));
}

DepthMap resize_depth(const DepthMap& depth, int out_width, int out_height) {
  check_resize(out_width, out_height);
  if (out_width == depth.width() && out_height == depth.height()) return depth;
  const auto tx = make_taps(depth.width(), out_width);
  const auto ty = make_taps(depth.height(), out_height);
  const auto n = static_cast<std::size_t>(out_width) * out_height;
  std::vector<double> values(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  for (int y = 0; y < out_height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const Tap& b = tx[x];
      const int ys[4] = {a.i0, a.i0, a.i1, a.i1};
      const int xs[4] = {b.i0, b.i1, b.i0, b.i1};
      const double ws[4] = {(1 - a.w1) * (1 - b.w1), (1 - a.w1) * b.w1, a.w1 * (1 - b.w1),
                            a.w1 * b.w1};
      double acc = 0.0, wsum = 0.0;
      bool any = false;
      for (int k = 0; k < 4; ++k) {
        if (!depth.valid(ys[k], xs[k])) continue;
        any = true;
        acc += ws[k] * depth.at(ys[k], xs[k]);
        wsum += ws[k];
      }
      const std::size_t i = static_cast<std::size_t>(y) * out_width + x;
      if (!any) continue;
      if (wsum > 0.0) {
        values[i] = acc / wsum;
      } else {
        // Only zero-weight valid neighbours: take the first one.
        for (int k = 0; k < 4; ++k) {
          if (depth.valid(ys[k], xs[k])) {
            values[i] = depth.at(ys[k], xs[k]);
            break;
          }
        }
      }
      valid[i] = 1;
    }
  }
  return DepthMap(out_height, out_width, std::move(values), std::move(valid));
}

Image crop(const Image& image, int top, int left, int height, int width) {
  check_crop(image.height(), image.width(), top, left, height, width);
  std::vector<double> out(static_cast<std::size_t>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = image.at(top + y, left + x, c);
      }
    }
  }
  return Image(height, width, std::move(out));
}

DepthMap crop(const DepthMap& depth, int top, int left, int height, int width) {
  check_crop(depth.height(), depth.width(), top, left, height, width);
  const auto n = static_cast<std::size_t>(height) * width;
  std::vector<double> values(n);
  std::vector<std::uint8_t> valid(n);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      values[i] = depth.at(top + y, left + x);
      valid[i] = depth.valid(top + y, left + x) ? 1 : 0;
    }
  }
  return DepthMap(height, width, std::move(values), std::move(valid));
}

namespace {

template <typename SrcIndex>
Image remap_image(const Image& image, SrcIndex src) {
  const int h = image.height(), w = image.width();
  std::vector<double> out(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto [sy, sx] = src(y, x);
      for (int c = 0; c < 3; ++c) {
        out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = image.at(sy, sx, c);
      }
    }
  }
  return Image(h, w, std::move(out));
}

template <typename SrcIndex>
DepthMap remap_depth(const DepthMap& depth, SrcIndex src) {
  const int h = depth.height(), w = depth.width();
  const auto n = static_cast<std::size_t>(h) * w;
  std::vector<double> values(n);
  std::vector<std::uint8_t> valid(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto [sy, sx] = src(y, x);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      values[i] = depth.at(sy, sx);
      valid[i] = depth.valid(sy, sx) ? 1 : 0;
    }
  }
  return DepthMap(h, w, std::move(values), std::move(valid));
}

}  // namespace

Image flip_horizontal(const Image& image) {
  const int w = image.width();
  return remap_image(image, [w](int y, int x) { return std::pair{y, w - 1 - x}; });
}

Image flip_vertical(const Image& image) {
  const int h = image.height();
  return remap_image(image, [h](int y, int x) { return std::pair{h - 1 - y, x}; });
}

DepthMap flip_horizontal(const DepthMap& depth) {
  const int w = depth.width();
  return remap_depth(depth, [w](int y, int x) { return std::pair{y, w - 1 - x}; });
}

DepthMap flip_vertical(const DepthMap& depth) {
  const int h = depth.height();
  return remap_depth(depth, [h](int y, int x) { return std::pair{h - 1 - y, x}; });
}

}  // namespace sim2real
