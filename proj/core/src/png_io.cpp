#include "sim2real/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fmt/format.h>
#include <memory>

#include "sim2real/error.hpp"

namespace sim2real {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return f;
}

// Decodes into either 8-bit RGB or 16-bit gray depending on want_rgb.
struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb8;
  std::vector<std::uint16_t> gray16;
};

Decoded decode(const std::filesystem::path& path, bool want_rgb) {
  FilePtr file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(fmt::format("'{}' is not a PNG file", path.string()));
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(fmt::format("failed to decode '{}'", path.string()));
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);

  std::size_t row_bytes = 0;
  if (want_rgb) {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    row_bytes = static_cast<std::size_t>(out.width) * 3;
    out.rgb8.resize(row_bytes * out.height);
    for (int y = 0; y < out.height; ++y) rows.push_back(out.rgb8.data() + y * row_bytes);
  } else {
    if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw IoError(fmt::format("'{}' is not a 16-bit grayscale PNG", path.string()));
    }
    png_set_swap(png);  // host order (little endian)
    png_read_update_info(png, info);
    row_bytes = static_cast<std::size_t>(out.width) * 2;
    out.gray16.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y) {
      rows.push_back(reinterpret_cast<png_bytep>(out.gray16.data() + static_cast<std::size_t>(y) * out.width));
    }
  }
  if (png_get_rowbytes(png, info) != row_bytes) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(fmt::format("unexpected row layout in '{}'", path.string()));
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, bool rgb, const void* data) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(fmt::format("failed to encode '{}'", path.string()));
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               rgb ? 8 : 16, rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (!rgb) png_set_swap(png);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * (rgb ? 3 : 2);
  auto* base = static_cast<const std::uint8_t*>(data);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(base + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_png_image(const std::filesystem::path& path) {
  Decoded d = decode(path, true);
  std::vector<double> px(d.rgb8.size());
  std::transform(d.rgb8.begin(), d.rgb8.end(), px.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return Image(d.height, d.width, std::move(px));
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DimensionMismatch("RGB buffer size does not match image dimensions");
  }
  encode(path, width, height, true, rgb.data());
}

void write_png_image(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> rgb(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), rgb.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  encode(path, image.width(), image.height(), true, rgb.data());
}

Gray16 read_png_gray16(const std::filesystem::path& path) {
  Decoded d = decode(path, false);
  return Gray16{d.width, d.height, std::move(d.gray16)};
}

void write_png_gray16(const std::filesystem::path& path, const Gray16& image) {
  if (image.values.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw DimensionMismatch("gray16 buffer size does not match image dimensions");
  }
  encode(path, image.width, image.height, false, image.values.data());
}

DepthMap read_depth_png(const std::filesystem::path& path, double scale_mm) {
  if (!(scale_mm > 0.0) || !std::isfinite(scale_mm)) {
    throw RangeError(fmt::format("depth scale {} mm/unit must be positive", scale_mm));
  }
  Gray16 g = read_png_gray16(path);
  std::vector<double> values(g.values.size());
  std::vector<std::uint8_t> valid(g.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    values[i] = g.values[i] * scale_mm;
    valid[i] = g.values[i] != 0 ? 1 : 0;
  }
  return DepthMap(g.height, g.width, std::move(values), std::move(valid));
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale_mm) {
  if (!(scale_mm > 0.0) || !std::isfinite(scale_mm)) {
    throw RangeError(fmt::format("depth scale {} mm/unit must be positive", scale_mm));
  }
  Gray16 g{depth.width(), depth.height(), std::vector<std::uint16_t>(depth.values().size(), 0)};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (depth.valid_mask()[i] == 0) continue;
    const double raw = std::round(depth.values()[i] / scale_mm);
    g.values[i] = static_cast<std::uint16_t>(std::clamp(raw, 1.0, 65535.0));
  }
  write_png_gray16(path, g);
}

}  // namespace sim2real
