#pragma once

#include "sim2real/types.hpp"

namespace sim2real {

// Bilinear resampling with half-pixel centres (src = (dst + 0.5) * scale - 0.5,
// borders clamped). Same-size resizes are exact copies.
Image resize_bilinear(const Image& image, int out_width, int out_height);

// Bilinear over valid neighbours only; an output pixel is invalid when none of
// its four source neighbours is valid.
DepthMap resize_depth(const DepthMap& depth, int out_width, int out_height);

Image crop(const Image& image, int top, int left, int height, int width);
DepthMap crop(const DepthMap& depth, int top, int left, int height, int width);

Image flip_horizontal(const Image& image);
Image flip_vertical(const Image& image);
DepthMap flip_horizontal(const DepthMap& depth);
DepthMap flip_vertical(const DepthMap& depth);

}  // namespace sim2real
