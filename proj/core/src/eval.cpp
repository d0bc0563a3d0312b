#include "sim2real/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "sim2real/error.hpp"
#include "sim2real/rng.hpp"

namespace sim2real {

namespace {

void check_same_size(const DepthMap& a, const DepthMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionMismatch(fmt::format("prediction {}x{} vs ground truth {}x{}", a.width(),
                                        a.height(), b.width(), b.height()));
  }
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

DepthMap median_rescale(const DepthMap& pred, const DepthMap& gt) {
  check_same_size(pred, gt);
  std::vector<double> p, g;
  for (std::size_t i = 0; i < pred.values().size(); ++i) {
    if (pred.valid_mask()[i] && gt.valid_mask()[i]) {
      p.push_back(pred.values()[i]);
      g.push_back(gt.values()[i]);
    }
  }
  if (p.empty()) throw InputError("median_rescale: prediction and ground truth share no valid pixel");
  const double mp = median(std::move(p));
  if (!(mp > 0.0)) throw InputError(fmt::format("median_rescale: median prediction is {}", mp));
  const double factor = median(std::move(g)) / mp;
  std::vector<double> values(pred.values().begin(), pred.values().end());
  std::vector<std::uint8_t> mask(pred.valid_mask().begin(), pred.valid_mask().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) values[i] *= factor;
  }
  return DepthMap(pred.height(), pred.width(), std::move(values), std::move(mask));
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  check_same_size(pred, gt);
  double sq = 0.0, rel = 0.0;
  std::size_t n = 0, n_pos = 0, d1 = 0, d2 = 0, d3 = 0;
  constexpr double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < pred.values().size(); ++i) {
    if (!pred.valid_mask()[i] || !gt.valid_mask()[i]) continue;
    const double p = pred.values()[i], g = gt.values()[i];
    sq += (p - g) * (p - g);
    ++n;
    if (g <= 0.0) continue;
    rel += std::abs(p - g) / g;
    ++n_pos;
    const double ratio = p > 0.0 ? std::max(p / g, g / p) : INFINITY;
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
  }
  if (n == 0) throw InputError("depth_metrics: no jointly valid pixels");
  DepthMetrics m;
  m.rmse = std::sqrt(sq / static_cast<double>(n));
  if (n_pos > 0) {
    const auto np = static_cast<double>(n_pos);
    m.abs_rel = rel / np;
    m.delta1 = static_cast<double>(d1) / np;
    m.delta2 = static_cast<double>(d2) / np;
    m.delta3 = static_cast<double>(d3) / np;
  }
  return m;
}

DepthMetrics mean_metrics(std::span<const DepthMetrics> per_frame) {
  if (per_frame.empty()) throw InputError("mean_metrics: no frames");
  DepthMetrics m;
  for (const auto& f : per_frame) {
    m.rmse += f.rmse;
    m.abs_rel += f.abs_rel;
    m.delta1 += f.delta1;
    m.delta2 += f.delta2;
    m.delta3 += f.delta3;
  }
  const auto n = static_cast<double>(per_frame.size());
  m.rmse /= n;
  m.abs_rel /= n;
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

namespace {

Eigen::MatrixXd to_matrix(const FeatureSet& s, const char* name) {
  if (s.size() < 2) throw InputError(fmt::format("feature set {} needs at least 2 samples", name));
  const std::size_t d = s.front().size();
  if (d == 0) throw InputError("feature vectors are empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].size() != d) throw DimensionMismatch("feature vectors differ in length");
    for (std::size_t k = 0; k < d; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s[i][k];
  }
  return m;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd c = x.rowwise() - mean;
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const FeatureSet& a, const FeatureSet& b) {
  const Eigen::MatrixXd xa = to_matrix(a, "a"), xb = to_matrix(b, "b");
  if (xa.cols() != xb.cols()) throw DimensionMismatch("feature sets differ in dimension");
  const Eigen::RowVectorXd ma = xa.colwise().mean(), mb = xb.colwise().mean();
  const Eigen::MatrixXd ca = covariance(xa, ma), cb = covariance(xb, mb);
  if (!ca.allFinite() || !cb.allFinite()) throw RangeError("feature covariance is not finite");
  const Eigen::MatrixXd sa = psd_sqrt(ca);
  const Eigen::MatrixXd inner = sa * cb * sa;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
  // Rounding can leave a tiny negative remainder for identical sets.
  return std::max(0.0, value);
}

double polynomial_kernel(std::span<const double> x, std::span<const double> y) {
  const double dot = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  const double base = dot / static_cast<double>(x.size()) + 1.0;
  return base * base * base;
}

namespace {

double mmd2_unbiased(const FeatureSet& a, const FeatureSet& b, std::span<const std::size_t> ia,
                     std::span<const std::size_t> ib) {
  const std::size_t m = ia.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const auto& xi = a[ia[i]];
      const auto& xj = a[ia[j]];
      const auto& yi = b[ib[i]];
      const auto& yj = b[ib[j]];
      sum += polynomial_kernel(xi, xj) + polynomial_kernel(yi, yj) - polynomial_kernel(xi, yj) -
             polynomial_kernel(xj, yi);
    }
  }
  return sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

}  // namespace

KidResult kid(const FeatureSet& a, const FeatureSet& b, const KidOptions& options) {
  if (a.empty() || b.empty()) throw InputError("kid needs non-empty feature sets");
  if (a.front().size() != b.front().size()) throw DimensionMismatch("feature sets differ in dimension");
  const std::size_t smallest = std::min(a.size(), b.size());
  if (smallest < 2) throw InputError("kid needs at least 2 samples per set");
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.subset_size, 2)), smallest);
  KidResult r;
  r.subset_size = static_cast<int>(m);
  std::vector<double> values;
  if (m == a.size() && m == b.size()) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    values.push_back(mmd2_unbiased(a, b, idx, idx));
  } else {
    Rng rng(options.seed);
    std::vector<std::size_t> pa(a.size()), pb(b.size());
    for (int s = 0; s < std::max(options.n_subsets, 1); ++s) {
      std::iota(pa.begin(), pa.end(), 0);
      std::iota(pb.begin(), pb.end(), 0);
      rng.shuffle(pa);
      rng.shuffle(pb);
      values.push_back(mmd2_unbiased(a, b, std::span(pa).first(m), std::span(pb).first(m)));
    }
  }
  r.n_subsets = static_cast<int>(values.size());
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(var / n);
  return r;
}

nlohmann::json to_json(const DepthMetrics& m) {
  return {{"rmse", m.rmse}, {"abs_rel", m.abs_rel}, {"delta1", m.delta1}, {"delta2", m.delta2}, {"delta3", m.delta3}};
}

nlohmann::json to_json(const TranslationMetrics& m) {
  return {{"fid", m.fid}, {"kid_mean", m.kid_mean}, {"kid_std", m.kid_std}, {"extractor_id", m.extractor_id}};
}

}  // namespace sim2real
