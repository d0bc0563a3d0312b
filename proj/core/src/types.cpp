#include "sim2real/types.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "sim2real/error.hpp"

namespace sim2real {

std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

Domain domain_from_string(std::string_view s) {
  if (s == "A") return Domain::A;
  if (s == "B") return Domain::B;
  throw InputError(fmt::format("unknown domain tag '{}' (expected \"A\" or \"B\")", s));
}

namespace {

void check_sides(int height, int width) {
  if (height < kMinImageSide || width < kMinImageSide) {
    throw InputError(fmt::format("image is {}x{}; both sides must be >= {}", width, height,
                                 kMinImageSide));
  }
}

}  // namespace

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_sides(height, width);
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw DimensionMismatch(fmt::format("image buffer holds {} values, expected {}x{}x3",
                                        pixels_.size(), height, width));
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    const double v = pixels_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw RangeError(fmt::format("pixel value {} at flat index {} is outside [0,1]", v, i));
    }
  }
}

Image Image::filled(int height, int width, double r, double g, double b) {
  std::vector<double> px(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return Image(height, width, std::move(px));
}

DepthMap::DepthMap(int height, int width, std::vector<double> values,
                   std::vector<std::uint8_t> valid)
    : height_(height), width_(width), values_(std::move(values)), valid_(std::move(valid)) {
  check_sides(height, width);
  const auto n = static_cast<std::size_t>(height) * width;
  if (values_.size() != n || valid_.size() != n) {
    throw DimensionMismatch(fmt::format("depth buffers hold {} values / {} mask entries, expected {}",
                                        values_.size(), valid_.size(), n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i] == 0) continue;
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw RangeError(fmt::format("valid depth {} at flat index {} must be finite and >= 0",
                                   values_[i], i));
    }
  }
}

DepthMap::DepthMap(int height, int width, std::vector<double> values)
    : DepthMap(height, width, std::move(values),
               std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(height, 0)) *
                                             std::max(width, 0),
                                         1)) {}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid_.begin(), valid_.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

void LossWeights::validate() const {
  for (double w : {lambda_gan, lambda_cyc, lambda_mi}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw RangeError(fmt::format("loss weight {} must be finite and >= 0", w));
    }
  }
}

const PairedSample& validate_pair(const PairedSample& sample) {
  if (sample.image.height() != sample.depth.height() ||
      sample.image.width() != sample.depth.width()) {
    throw DimensionMismatch(fmt::format("image is {}x{} but depth is {}x{}", sample.image.width(),
                                        sample.image.height(), sample.depth.width(),
                                        sample.depth.height()));
  }
  return sample;
}

}  // namespace sim2real
