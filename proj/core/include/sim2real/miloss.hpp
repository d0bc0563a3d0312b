#pragma once

#include <span>
#include <vector>

#include <torch/types.h>

#include "sim2real/types.hpp"

namespace sim2real {

// Binning shared by the depth and intensity axes of the joint histogram.
// Values outside a range clamp into the edge bins.
struct HistogramSpec {
  int n_bins = 256;
  double depth_min = 0.0;  // mm
  double depth_max = 200.0;
  double intensity_min = 0.0;
  double intensity_max = 1.0;
  // Gaussian kernel standard deviation, in units of intensity bin width.
  double soft_bandwidth = 0.5;

  void validate() const;
  int depth_bin(double depth_mm) const;
  int intensity_bin(double value) const;
  double intensity_bin_width() const { return (intensity_max - intensity_min) / n_bins; }
};

struct IntensityMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Per-pixel mean of the three colour channels.
IntensityMap intensity(const Image& image);

// n_bins × n_bins table, rows indexed by depth bin and columns by intensity bin.
class JointHistogram {
 public:
  // Throws RangeError on negative/non-finite counts or a zero total.
  JointHistogram(int n_bins, std::vector<double> counts);

  int n_bins() const { return n_bins_; }
  double count(int depth_bin, int intensity_bin) const {
    return counts_[static_cast<std::size_t>(depth_bin) * n_bins_ + intensity_bin];
  }
  std::span<const double> counts() const { return counts_; }
  std::span<const double> depth_marginal() const { return depth_marginal_; }
  std::span<const double> intensity_marginal() const { return intensity_marginal_; }
  double total() const { return total_; }
  JointHistogram transposed() const;

 private:
  int n_bins_;
  std::vector<double> counts_;
  std::vector<double> depth_marginal_;
  std::vector<double> intensity_marginal_;
  double total_;
};

// Each valid pixel adds 1 to one cell; N is the number of valid pixels.
JointHistogram hard_joint_histogram(const DepthMap& depth, const IntensityMap& intensity,
                                    const HistogramSpec& spec);

// MI in nats:
//   sum_ij (c_ij / N) log(N c_ij / (c_i. c_.j))
// where c_i. and c_.j are the marginal bin counts. (Reading the denominator as
// whole-map cardinalities would make every log term constant, so the marginal
// counts are used, which is the standard definition.) Empty cells contribute 0.
double mutual_information(const JointHistogram& h);

// Shannon entropy (nats) of a vector of nonnegative counts.
double entropy(std::span<const double> counts);

// Differentiable MI between hard-binned depth and Gaussian-soft-binned
// intensity. Each valid pixel spreads unit mass over the intensity bins with
// weights softmax(-(v - centre_j)^2 / (2 sigma^2)); depth carries no gradient.
double soft_mi(const DepthMap& depth, const Image& translated, const HistogramSpec& spec);

// Negative soft MI: minimising it maximises depth/intensity dependence.
double mi_loss(const DepthMap& depth, const Image& translated, const HistogramSpec& spec);

// Batched tensor route used during training.
//   depth_mm: [B,H,W] float, valid: [B,H,W] bool, images: [B,3,H,W] in [0,1].
// Depth bins are [B,H,W] int64.
torch::Tensor depth_bins_tensor(const torch::Tensor& depth_mm, const HistogramSpec& spec);
// Returns per-image MI, shape [B], differentiable w.r.t. images.
torch::Tensor soft_mi_tensor(const torch::Tensor& depth_bins, const torch::Tensor& valid,
                             const torch::Tensor& images, const HistogramSpec& spec);
// -mean over the batch of soft_mi_tensor.
torch::Tensor mi_loss_tensor(const torch::Tensor& depth_bins, const torch::Tensor& valid,
                             const torch::Tensor& images, const HistogramSpec& spec);

}  // namespace sim2real
