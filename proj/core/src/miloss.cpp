#include "sim2real/miloss.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include <torch/torch.h>

#include "sim2real/error.hpp"

namespace sim2real {

void HistogramSpec::validate() const {
  if (n_bins < 2) throw RangeError(fmt::format("n_bins must be >= 2, got {}", n_bins));
  if (!(depth_min < depth_max) || !std::isfinite(depth_min) || !std::isfinite(depth_max)) {
    throw RangeError(fmt::format("depth range ({}, {}) is empty", depth_min, depth_max));
  }
  if (!(intensity_min < intensity_max)) {
    throw RangeError(fmt::format("intensity range ({}, {}) is empty", intensity_min, intensity_max));
  }
  if (!(soft_bandwidth > 0.0) || !std::isfinite(soft_bandwidth)) {
    throw RangeError(fmt::format("soft_bandwidth must be positive, got {}", soft_bandwidth));
  }
}

namespace {

int bin_of(double v, double lo, double hi, int n) {
  const double t = std::floor((v - lo) / (hi - lo) * n);
  if (!(t >= 0.0)) return 0;  // also catches NaN
  return t >= n ? n - 1 : static_cast<int>(t);
}

}  // namespace

int HistogramSpec::depth_bin(double depth_mm) const {
  return bin_of(depth_mm, depth_min, depth_max, n_bins);
}

int HistogramSpec::intensity_bin(double value) const {
  return bin_of(value, intensity_min, intensity_max, n_bins);
}

IntensityMap intensity(const Image& image) {
  IntensityMap m{image.height(), image.width(), {}};
  m.values.resize(static_cast<std::size_t>(m.height) * m.width);
  const auto px = image.pixels();
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = (px[3 * i] + px[3 * i + 1] + px[3 * i + 2]) / 3.0;
  }
  return m;
}

JointHistogram::JointHistogram(int n_bins, std::vector<double> counts)
    : n_bins_(n_bins), counts_(std::move(counts)), total_(0.0) {
  if (n_bins < 1 || counts_.size() != static_cast<std::size_t>(n_bins) * n_bins) {
    throw DimensionMismatch(fmt::format("joint histogram needs {}x{} counts, got {}", n_bins,
                                        n_bins, counts_.size()));
  }
  depth_marginal_.assign(n_bins, 0.0);
  intensity_marginal_.assign(n_bins, 0.0);
  for (int i = 0; i < n_bins; ++i) {
    for (int j = 0; j < n_bins; ++j) {
      const double c = counts_[static_cast<std::size_t>(i) * n_bins + j];
      if (!std::isfinite(c) || c < 0.0) {
        throw RangeError(fmt::format("histogram count {} at ({}, {}) is invalid", c, i, j));
      }
      depth_marginal_[i] += c;
      intensity_marginal_[j] += c;
    }
  }
  for (double r : depth_marginal_) total_ += r;
  if (!(total_ > 0.0)) throw RangeError("joint histogram has zero total count");
}

JointHistogram JointHistogram::transposed() const {
  std::vector<double> t(counts_.size());
  for (int i = 0; i < n_bins_; ++i) {
    for (int j = 0; j < n_bins_; ++j) {
      t[static_cast<std::size_t>(j) * n_bins_ + i] = counts_[static_cast<std::size_t>(i) * n_bins_ + j];
    }
  }
  return JointHistogram(n_bins_, std::move(t));
}

JointHistogram hard_joint_histogram(const DepthMap& depth, const IntensityMap& inten,
                                    const HistogramSpec& spec) {
  spec.validate();
  if (depth.height() != inten.height || depth.width() != inten.width) {
    throw DimensionMismatch(fmt::format("depth {}x{} vs intensity {}x{}", depth.width(),
                                        depth.height(), inten.width, inten.height));
  }
  const int n = spec.n_bins;
  std::vector<double> counts(static_cast<std::size_t>(n) * n, 0.0);
  std::size_t used = 0;
  const auto mask = depth.valid_mask();
  const auto values = depth.values();
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (mask[p] == 0) continue;
    const int di = spec.depth_bin(values[p]);
    const int ij = spec.intensity_bin(inten.values[p]);
    counts[static_cast<std::size_t>(di) * n + ij] += 1.0;
    ++used;
  }
  if (used == 0) throw InputError("joint histogram needs at least one valid pixel");
  return JointHistogram(n, std::move(counts));
}

// The log term divides by the marginal counts of bin i and bin j. Dividing by
// the whole-map pixel counts instead would make the ratio the same for every
// cell, so that reading is not used.
double mutual_information(const JointHistogram& h) {
  const int n = h.n_bins();
  const double total = h.total();
  const auto rows = h.depth_marginal();
  const auto cols = h.intensity_marginal();
  double mi = 0.0;
  for (int i = 0; i < n; ++i) {
    if (rows[i] <= 0.0) continue;
    for (int j = 0; j < n; ++j) {
      const double c = h.count(i, j);
      if (c <= 0.0) continue;
      mi += (c / total) * std::log(total * c / (rows[i] * cols[j]));
    }
  }
  // Only rounding can push this below zero.
  return std::max(0.0, mi);
}

double entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / total) * std::log(c / total);
  }
  return h;
}

torch::Tensor depth_bins_tensor(const torch::Tensor& depth_mm, const HistogramSpec& spec) {
  spec.validate();
  auto scaled = (depth_mm.to(torch::kFloat64) - spec.depth_min) / (spec.depth_max - spec.depth_min) *
                spec.n_bins;
  scaled = torch::nan_to_num(scaled, 0.0);
  return torch::floor(scaled).clamp(0, spec.n_bins - 1).to(torch::kInt64);
}

torch::Tensor soft_mi_tensor(const torch::Tensor& depth_bins, const torch::Tensor& valid,
                             const torch::Tensor& images, const HistogramSpec& spec) {
  spec.validate();
  TORCH_CHECK(images.dim() == 4 && images.size(1) == 3, "images must be [B,3,H,W]");
  TORCH_CHECK(depth_bins.sizes() == valid.sizes(), "depth bins and valid mask differ in shape");
  TORCH_CHECK(depth_bins.size(0) == images.size(0) && depth_bins.size(1) == images.size(2) &&
                  depth_bins.size(2) == images.size(3),
              "depth and image shapes differ");
  const int n = spec.n_bins;
  const auto opts = images.options();
  const double bin_w = spec.intensity_bin_width();
  const double sigma = spec.soft_bandwidth * bin_w;
  const auto centres =
      torch::arange(n, opts) * bin_w + (spec.intensity_min + 0.5 * bin_w);
  const double tiny = images.scalar_type() == torch::kFloat64 ? 1e-300 : 1e-30;

  std::vector<torch::Tensor> per_image;
  per_image.reserve(static_cast<std::size_t>(images.size(0)));
  for (int64_t b = 0; b < images.size(0); ++b) {
    const auto mask = valid[b].reshape({-1}).to(torch::kBool);
    const auto values = images[b].mean(0).reshape({-1}).masked_select(mask);
    const auto bins = depth_bins[b].reshape({-1}).masked_select(mask);
    const int64_t count = values.size(0);
    if (count == 0) throw InputError("soft MI needs at least one valid pixel per image");

    const auto diff = values.unsqueeze(1) - centres.unsqueeze(0);
    const auto weights = torch::softmax(-(diff * diff) / (2.0 * sigma * sigma), 1);
    auto joint = torch::zeros({n, n}, opts).index_add(0, bins, weights) / static_cast<double>(count);
    const auto p_depth = joint.sum(1, true);
    const auto p_inten = joint.sum(0, true);
    const auto outer = p_depth * p_inten;
    per_image.push_back(
        (joint * (torch::log(joint.clamp_min(tiny)) - torch::log(outer.clamp_min(tiny)))).sum());
  }
  return torch::stack(per_image);
}

torch::Tensor mi_loss_tensor(const torch::Tensor& depth_bins, const torch::Tensor& valid,
                             const torch::Tensor& images, const HistogramSpec& spec) {
  return -soft_mi_tensor(depth_bins, valid, images, spec).mean();
}

namespace {

void check_same_size(const DepthMap& depth, const Image& image) {
  if (depth.height() != image.height() || depth.width() != image.width()) {
    throw DimensionMismatch(fmt::format("depth {}x{} vs image {}x{}", depth.width(),
                                        depth.height(), image.width(), image.height()));
  }
}

}  // namespace

double soft_mi(const DepthMap& depth, const Image& translated, const HistogramSpec& spec) {
  check_same_size(depth, translated);
  const int h = depth.height(), w = depth.width();
  const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);
  auto img = torch::from_blob(const_cast<double*>(translated.pixels().data()), {h, w, 3}, f64)
                 .permute({2, 0, 1})
                 .unsqueeze(0)
                 .contiguous();
  auto dep = torch::from_blob(const_cast<double*>(depth.values().data()), {1, h, w}, f64).clone();
  auto valid = torch::from_blob(const_cast<std::uint8_t*>(depth.valid_mask().data()), {1, h, w},
                                torch::TensorOptions().dtype(torch::kUInt8))
                   .to(torch::kBool);
  if (valid.sum().item<int64_t>() == 0) throw InputError("soft MI needs at least one valid pixel");
  torch::NoGradGuard no_grad;
  return soft_mi_tensor(depth_bins_tensor(dep, spec), valid, img, spec).item<double>();
}

double mi_loss(const DepthMap& depth, const Image& translated, const HistogramSpec& spec) {
  return -soft_mi(depth, translated, spec);
}

}  // namespace sim2real
