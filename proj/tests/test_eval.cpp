#include <doctest.h>

#include <cmath>

#include "sim2real/error.hpp"
#include "sim2real/eval.hpp"
#include "sim2real/features.hpp"
#include "sim2real/rng.hpp"
#include "support/oracles.hpp"
#include "support/samples.hpp"
#include "support/tempdir.hpp"

using namespace sim2real;

namespace {

// Depth maps need at least 8x8 pixels, so hand examples are padded with
// invalid pixels.
DepthMap padded(const std::vector<double>& values) {
  std::vector<double> v(64, 0.0);
  std::vector<std::uint8_t> m(64, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[i] = values[i];
    m[i] = 1;
  }
  return DepthMap(8, 8, v, m);
}

FeatureSet random_features(int n, int d, Rng& rng, double shift = 0.0, double scale = 1.0) {
  FeatureSet f(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& row : f)
    for (auto& v : row) v = shift + scale * rng.normal();
  return f;
}

FeatureSet rotate(const FeatureSet& f, const std::vector<std::vector<double>>& q) {
  FeatureSet out = f;
  for (std::size_t n = 0; n < f.size(); ++n)
    for (std::size_t i = 0; i < q.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) s += q[i][j] * f[n][j];
      out[n][i] = s;
    }
  return out;
}

// Product of random Givens rotations.
std::vector<std::vector<double>> random_rotation(int d, Rng& rng) {
  std::vector<std::vector<double>> q(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int i = 0; i < d; ++i) q[i][i] = 1.0;
  for (int k = 0; k < 4 * d; ++k) {
    const int a = static_cast<int>(rng.below(d));
    int b = static_cast<int>(rng.below(d - 1));
    if (b >= a) ++b;
    const double t = rng.uniform(0.0, 6.283185307179586);
    const double c = std::cos(t), s = std::sin(t);
    for (int j = 0; j < d; ++j) {
      const double qa = q[a][j], qb = q[b][j];
      q[a][j] = c * qa - s * qb;
      q[b][j] = s * qa + c * qb;
    }
  }
  return q;
}

void check_metrics_equal(const DepthMetrics& a, const DepthMetrics& b, double tol) {
  CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(tol));
  CHECK(a.abs_rel == doctest::Approx(b.abs_rel).epsilon(tol));
  CHECK(a.delta1 == b.delta1);
  CHECK(a.delta2 == b.delta2);
  CHECK(a.delta3 == b.delta3);
}

}  // namespace

TEST_CASE("median rescale hand example") {
  const auto r = median_rescale(padded({2, 4, 10}), padded({1, 2, 4}));
  CHECK(r.values()[0] == doctest::Approx(1.0));
  CHECK(r.values()[1] == doctest::Approx(2.0));
  CHECK(r.values()[2] == doctest::Approx(5.0));
}

TEST_CASE("median rescale cancels a global scale") {
  Rng rng(1);
  const auto gt = testing_support::random_depth(16, 16, rng, 1.0, 100.0);
  std::vector<double> doubled;
  for (double v : gt.values()) doubled.push_back(2.0 * v);
  const auto r = median_rescale(DepthMap(16, 16, doubled), gt);
  for (std::size_t i = 0; i < doubled.size(); ++i) CHECK(r.values()[i] == doctest::Approx(gt.values()[i]).epsilon(1e-12));
  const auto same = median_rescale(gt, gt);
  for (std::size_t i = 0; i < doubled.size(); ++i) CHECK(same.values()[i] == gt.values()[i]);
}

TEST_CASE("median rescale error cases") {
  CHECK_THROWS_AS(median_rescale(padded({0, 0, 0}), padded({1, 2, 3})), InputError);
  const DepthMap none(8, 8, std::vector<double>(64, 1.0), std::vector<std::uint8_t>(64, 0));
  CHECK_THROWS_AS(median_rescale(none, padded({1})), InputError);
  CHECK_THROWS_AS(median_rescale(DepthMap(8, 8, std::vector<double>(64, 1.0)), DepthMap(9, 8, std::vector<double>(72, 1.0))),
                  DimensionMismatch);
}

TEST_CASE("depth metrics hand example with the strict threshold edge") {
  const auto m = depth_metrics(padded({1, 2, 5}), padded({1, 2, 4}));
  CHECK(m.rmse == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
  CHECK(m.abs_rel == doctest::Approx(0.25 / 3.0).epsilon(1e-12));
  CHECK(m.delta1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.delta2 == 1.0);
  CHECK(m.delta3 == 1.0);
}

TEST_CASE("perfect prediction scores perfectly") {
  Rng rng(2);
  const auto gt = testing_support::random_depth(12, 12, rng, 1.0, 50.0);
  const auto m = depth_metrics(gt, gt);
  CHECK(m.rmse == 0.0);
  CHECK(m.abs_rel == 0.0);
  CHECK(m.delta1 == 1.0);
  CHECK(m.delta3 == 1.0);
  CHECK_THROWS_AS(depth_metrics(gt, DepthMap(12, 12, std::vector<double>(144, 1.0), std::vector<std::uint8_t>(144, 0))),
                  InputError);
}

TEST_CASE("delta metrics are monotone and bounded") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto gt = testing_support::random_depth(8, 8, rng, 0.5, 10.0);
    const auto pred = testing_support::random_depth(8, 8, rng, 0.5, 10.0);
    const auto m = depth_metrics(pred, gt);
    CHECK(m.delta1 <= m.delta2);
    CHECK(m.delta2 <= m.delta3);
    CHECK(m.delta3 <= 1.0);
    CHECK(m.delta1 >= 0.0);
    CHECK(m.rmse >= 0.0);
    CHECK(m.abs_rel >= 0.0);
  }
}

TEST_CASE("rescaled metrics ignore the prediction's scale") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto gt = testing_support::random_depth(16, 16, rng, 1.0, 100.0);
    const auto pred = testing_support::random_depth(16, 16, rng, 1.0, 100.0);
    const auto base = depth_metrics(median_rescale(pred, gt), gt);
    for (double c : {0.1, 3.0, 42.0}) {
      std::vector<double> scaled;
      for (double v : pred.values()) scaled.push_back(c * v);
      check_metrics_equal(depth_metrics(median_rescale(DepthMap(16, 16, scaled), gt), gt), base, 1e-9);
    }
  }
}

TEST_CASE("aggregate is the mean of per-frame metrics") {
  const std::vector<DepthMetrics> frames = {{1, 0.1, 0.5, 0.6, 0.7}, {3, 0.3, 0.7, 0.8, 0.9}};
  const auto m = mean_metrics(frames);
  CHECK(m.rmse == 2.0);
  CHECK(m.abs_rel == doctest::Approx(0.2));
  CHECK(m.delta1 == doctest::Approx(0.6));
  CHECK(m.delta3 == doctest::Approx(0.8));
}

TEST_CASE("FID closed form in one dimension") {
  CHECK(fid({{-1}, {1}}, {{2}, {4}}) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(fid({{2}, {4}}, {{-1}, {1}}) == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("FID identity, symmetry and rotation invariance") {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto a = random_features(60, 6, rng);
    const auto b = random_features(50, 6, rng, 0.5, 1.5);
    CHECK(std::abs(fid(a, a)) < 1e-6);
    const double ab = fid(a, b);
    CHECK(ab > 0.0);
    CHECK(std::abs(ab - fid(b, a)) < 1e-5);
    const auto q = random_rotation(6, rng);
    CHECK(std::abs(ab - fid(rotate(a, q), rotate(b, q))) < 1e-5);
  }
  CHECK_THROWS(fid({{1.0}}, {{1.0}, {2.0}}));
  CHECK_THROWS(fid({{1.0}, {NAN}}, {{1.0}, {2.0}}));
}

TEST_CASE("KID by direct kernel arithmetic") {
  const FeatureSet a = {{0.0}, {0.0}}, b = {{10.0}, {10.0}};
  const auto r = kid(a, b, {1, 1, 0});
  CHECK(r.subset_size == 2);
  CHECK(r.mean == doctest::Approx(1.0 + 101.0 * 101.0 * 101.0 - 2.0).epsilon(1e-12));
  CHECK(r.mean == doctest::Approx(oracle::mmd2_unbiased(a, b)).epsilon(1e-12));
  CHECK(polynomial_kernel(std::vector<double>{10.0}, std::vector<double>{10.0}) == 1030301.0);
}

TEST_CASE("KID against the oracle and on identical sets") {
  Rng rng(6);
  const auto a = random_features(12, 4, rng);
  const auto b = random_features(12, 4, rng, 0.3);
  const auto full = kid(a, b, {12, 1, 0});
  CHECK(full.n_subsets == 1);
  CHECK(full.mean == doctest::Approx(oracle::mmd2_unbiased(a, b)).epsilon(1e-10));
  CHECK(full.std == 0.0);
  CHECK(std::abs(kid(a, a, {12, 1, 0}).mean) < 1e-6);

  const auto big_a = random_features(80, 4, rng);
  const auto big_b = random_features(70, 4, rng, 0.5);
  const auto r1 = kid(big_a, big_b, {20, 10, 3});
  const auto r2 = kid(big_a, big_b, {20, 10, 3});
  CHECK(r1.mean == r2.mean);
  CHECK(r1.std == r2.std);
  CHECK(r1.std > 0.0);
  CHECK(r1.mean > 0.0);
  CHECK(kid(big_a, big_b, {500, 2, 0}).subset_size == 70);
  CHECK_THROWS(kid({}, big_b));
}

TEST_CASE("random-conv features are deterministic and ordered") {
  Rng rng(7);
  std::vector<Image> imgs;
  for (int i = 0; i < 3; ++i) imgs.push_back(testing_support::random_image(40, 30, rng));
  imgs.push_back(imgs[0]);
  const RandomConvExtractor ex(11);
  const auto batch = extract_features(imgs, ex);
  REQUIRE(batch.features.size() == 4);
  CHECK(batch.extractor_id == ex.id());
  CHECK(static_cast<int>(batch.features[0].size()) == ex.dim());
  CHECK(batch.features[0] == batch.features[3]);
  CHECK(batch.features[0] != batch.features[1]);
  CHECK(ex.extract(imgs[2]) == batch.features[2]);
  CHECK(RandomConvExtractor(11).extract(imgs[1]) == batch.features[1]);
  CHECK(RandomConvExtractor(12).extract(imgs[1]) != batch.features[1]);
  CHECK(RandomConvExtractor(12).id() != ex.id());
}

TEST_CASE("feature CSV round trip keeps the extractor id") {
  testing_support::TempDir tmp("features");
  FeatureBatch b{"randconv-test", {{1.5, -2.25, 3.0}, {0.1, 0.2, 0.3}}};
  save_feature_csv(tmp.path / "f.csv", b);
  const auto back = load_feature_csv(tmp.path / "f.csv");
  CHECK(back.extractor_id == "randconv-test");
  REQUIRE(back.features.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.features[i][j] == b.features[i][j]);
}
