#pragma once

#include <cmath>
#include <vector>

#include "sim2real/rng.hpp"
#include "sim2real/types.hpp"

namespace testing_support {

inline sim2real::Image random_image(int h, int w, sim2real::Rng& rng) {
  std::vector<double> px(static_cast<std::size_t>(h) * w * 3);
  for (auto& v : px) v = rng.uniform();
  return sim2real::Image(h, w, std::move(px));
}

inline sim2real::DepthMap random_depth(int h, int w, sim2real::Rng& rng, double lo = 0.0, double hi = 200.0) {
  std::vector<double> d(static_cast<std::size_t>(h) * w);
  for (auto& v : d) v = rng.uniform(lo, hi);
  return sim2real::DepthMap(h, w, std::move(d));
}

inline sim2real::Image gray_image(int h, int w, const std::vector<double>& values) {
  std::vector<double> px;
  px.reserve(values.size() * 3);
  for (double v : values) px.insert(px.end(), {v, v, v});
  return sim2real::Image(h, w, std::move(px));
}

}  // namespace testing_support
