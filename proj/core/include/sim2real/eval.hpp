#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sim2real/types.hpp"

namespace sim2real {

struct DepthMetrics {
  double rmse = 0.0;     // mm
  double abs_rel = 0.0;
  double delta1 = 0.0;   // fraction with max(pred/gt, gt/pred) < 1.25
  double delta2 = 0.0;   // < 1.25^2
  double delta3 = 0.0;   // < 1.25^3
};

struct TranslationMetrics {
  double fid = 0.0;
  double kid_mean = 0.0;
  double kid_std = 0.0;
  std::string extractor_id;
};

// pred * median(gt) / median(pred), medians over pixels valid in both maps.
// Throws InputError when nothing overlaps or median(pred) is not positive.
DepthMap median_rescale(const DepthMap& pred, const DepthMap& gt);

// Over jointly valid pixels. Pixels with gt <= 0 count towards RMSE but not
// towards AbsRel or the delta accuracies. The caller rescales explicitly.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

// Element-wise mean of per-frame metrics.
DepthMetrics mean_metrics(std::span<const DepthMetrics> per_frame);

using FeatureSet = std::vector<std::vector<double>>;

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)) with unbiased
// covariances. The square-root trace is taken from the symmetric product
// S_a^(1/2) S_b S_a^(1/2); negative eigenvalues from rounding are clipped.
double fid(const FeatureSet& a, const FeatureSet& b);

struct KidOptions {
  int subset_size = 100;
  int n_subsets = 10;
  std::uint64_t seed = 0;
};

struct KidResult {
  double mean = 0.0;
  double std = 0.0;
  int subset_size = 0;
  int n_subsets = 0;
};

// Unbiased MMD^2 U-statistic with kernel k(x,y) = (x.y/d + 1)^3:
//   1/(m(m-1)) sum_{i!=j} [k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i)]
// averaged over random equal-size subsets. subset_size shrinks to the smaller
// set when needed (minimum 2). When it covers both sets entirely a single
// subset is used with the sets in their given order.
KidResult kid(const FeatureSet& a, const FeatureSet& b, const KidOptions& options = {});

double polynomial_kernel(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const DepthMetrics& m);
nlohmann::json to_json(const TranslationMetrics& m);

}  // namespace sim2real
