#include "support/doctest_torch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>


#include "sim2real/error.hpp"
#include "sim2real/miloss.hpp"
#include "sim2real/rng.hpp"
#include "sim2real/toy_data.hpp"
#include "support/oracles.hpp"
#include "support/samples.hpp"

using namespace sim2real;
using testing_support::gray_image;
using testing_support::random_depth;
using testing_support::random_image;

namespace {

std::vector<double> intensity_values(const Image& img) {
  std::vector<double> out;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.push_back((img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0);
  return out;
}

double hard_mi(const DepthMap& d, const Image& img, const HistogramSpec& spec) {
  return mutual_information(hard_joint_histogram(d, intensity(img), spec));
}

}  // namespace

TEST_CASE("intensity is the channel mean") {
  std::vector<double> px(8 * 8 * 3, 0.0);
  px[0] = 0.2, px[1] = 0.4, px[2] = 0.6;
  px[3] = 1.0;
  const auto m = intensity(Image(8, 8, px));
  CHECK(m.at(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  std::vector<double> g(64);
  for (int i = 0; i < 64; ++i) g[i] = i / 64.0;
  const auto gm = intensity(gray_image(8, 8, g));
  for (int i = 0; i < 64; ++i) CHECK(gm.values[i] == doctest::Approx(g[i]).epsilon(1e-15));
}

TEST_CASE("two coupled pixels bin onto the diagonal") {
  std::vector<double> depth(64, 0.0);
  std::vector<std::uint8_t> valid(64, 0);
  depth[0] = 5.0, depth[1] = 15.0;
  valid[0] = valid[1] = 1;
  std::vector<double> inten(64, 0.5);
  inten[0] = 0.1, inten[1] = 0.9;
  HistogramSpec spec;
  spec.n_bins = 2;
  spec.depth_min = 0.0;
  spec.depth_max = 20.0;
  const auto h = hard_joint_histogram(DepthMap(8, 8, depth, valid), intensity(gray_image(8, 8, inten)), spec);
  CHECK(h.total() == 2.0);
  CHECK(h.count(0, 0) == 1.0);
  CHECK(h.count(0, 1) == 0.0);
  CHECK(h.count(1, 0) == 0.0);
  CHECK(h.count(1, 1) == 1.0);
  CHECK(mutual_information(h) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("identical pixels fill a single cell") {
  HistogramSpec spec;
  spec.n_bins = 16;
  const auto h = hard_joint_histogram(DepthMap(8, 8, std::vector<double>(64, 42.0)),
                                      intensity(Image::filled(8, 8, 0.3, 0.3, 0.3)), spec);
  int nonzero = 0;
  for (double c : h.counts()) nonzero += c > 0.0;
  CHECK(nonzero == 1);
  CHECK(h.count(spec.depth_bin(42.0), spec.intensity_bin(0.3)) == 64.0);
  CHECK(mutual_information(h) == 0.0);
}

TEST_CASE("out-of-range values clamp into the edge bins") {
  HistogramSpec spec;
  spec.n_bins = 4;
  CHECK(spec.depth_bin(-5.0) == 0);
  CHECK(spec.depth_bin(200.0) == 3);
  CHECK(spec.depth_bin(1e9) == 3);
  CHECK(spec.intensity_bin(1.0) == 3);
  CHECK(spec.intensity_bin(0.0) == 0);
}

TEST_CASE("joint counts match a per-pixel loop over a random 32x32 pair") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto img = random_image(32, 32, rng);
    std::vector<double> d(32 * 32);
    std::vector<std::uint8_t> v(32 * 32);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = rng.uniform(0.0, 230.0);
      v[i] = rng.uniform() < 0.85;
    }
    HistogramSpec spec;
    spec.n_bins = 8;
    const auto h = hard_joint_histogram(DepthMap(32, 32, d, v), intensity(img), spec);
    const std::vector<unsigned char> vv(v.begin(), v.end());
    const auto expect = oracle::joint_counts(d, vv, intensity_values(img), 8, 0.0, 200.0, 0.0, 1.0);
    REQUIRE(h.counts().size() == expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) CHECK(h.counts()[k] == expect[k]);
    CHECK(h.total() == std::count(v.begin(), v.end(), 1));
    CHECK(mutual_information(h) == doctest::Approx(oracle::mutual_information(expect, 8)).epsilon(1e-12));
  }
}

TEST_CASE("histogram with no valid pixel is rejected") {
  HistogramSpec spec;
  DepthMap d(8, 8, std::vector<double>(64, 1.0), std::vector<std::uint8_t>(64, 0));
  CHECK_THROWS_AS(hard_joint_histogram(d, intensity(Image::filled(8, 8, 0, 0, 0)), spec), InputError);
  CHECK_THROWS_AS(soft_mi(d, Image::filled(8, 8, 0, 0, 0), spec), InputError);
}

TEST_CASE("MI of a product histogram is zero") {
  const std::vector<double> px = {1, 3, 0, 6}, py = {2, 2, 5, 1};
  std::vector<double> counts;
  for (double a : px)
    for (double b : py) counts.push_back(a * b);
  CHECK(std::abs(mutual_information(JointHistogram(4, counts))) < 1e-12);
}

TEST_CASE("constant intensity gives zero MI") {
  std::vector<double> counts(16, 0.0);
  for (int d = 0; d < 4; ++d) counts[d * 4 + 2] = d + 1;
  CHECK(mutual_information(JointHistogram(4, counts)) == 0.0);
}

TEST_CASE("histogram rejects bad counts") {
  CHECK_THROWS_AS(JointHistogram(2, {1, -1, 0, 0}), RangeError);
  CHECK_THROWS_AS(JointHistogram(2, {0, 0, 0, 0}), RangeError);
  CHECK_THROWS_AS(JointHistogram(2, {1, NAN, 0, 0}), RangeError);
  CHECK_THROWS(JointHistogram(2, {1, 1, 1}));
}

TEST_CASE("random histograms respect entropy bounds and symmetry") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(15));
    std::vector<double> c(static_cast<std::size_t>(n) * n);
    for (auto& v : c) v = rng.uniform() < 0.4 ? 0.0 : std::floor(rng.uniform(0.0, 50.0));
    c[rng.below(c.size())] += 1.0;
    const JointHistogram h(n, c);
    const double mi = mutual_information(h);
    const std::vector<double> rows(h.depth_marginal().begin(), h.depth_marginal().end());
    const std::vector<double> cols(h.intensity_marginal().begin(), h.intensity_marginal().end());
    CHECK(mi >= -1e-12);
    CHECK(mi <= std::min(oracle::entropy(rows), oracle::entropy(cols)) + 1e-9);
    CHECK(std::abs(mi - mutual_information(h.transposed())) < 1e-12);
    CHECK(entropy(rows) == doctest::Approx(oracle::entropy(rows)).epsilon(1e-12));
  }
}

TEST_CASE("bin-preserving monotone remap leaves hard MI unchanged") {
  Rng rng(8);
  HistogramSpec spec;
  spec.n_bins = 16;
  const auto d = random_depth(16, 16, rng);
  const auto img = random_image(16, 16, rng);
  std::vector<double> remapped;
  for (double v : intensity_values(img)) {
    // Move each value monotonically within its own bin.
    const int b = spec.intensity_bin(v);
    const double lo = b / 16.0, w = 1.0 / 16.0;
    const double t = (v - lo) / w;
    remapped.push_back(lo + w * std::min(0.999, t * t));
  }
  CHECK(hard_mi(d, img, spec) == doctest::Approx(hard_mi(d, gray_image(16, 16, remapped), spec)).epsilon(1e-12));
}

TEST_CASE("soft MI approaches hard MI at small bandwidth") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto s = render_toy_scene(ToyStyle::A, 16, seed);
    HistogramSpec spec;
    spec.n_bins = 8;
    spec.soft_bandwidth = 0.05;
    const double hard = hard_mi(s.depth, s.image, spec);
    const double soft = soft_mi(s.depth, s.image, spec);
    CHECK(std::abs(hard - soft) < 0.05);
  }
}

TEST_CASE("soft MI of a constant image is zero") {
  Rng rng(3);
  HistogramSpec spec;
  spec.n_bins = 32;
  const auto d = random_depth(16, 16, rng);
  const double v = soft_mi(d, Image::filled(16, 16, 0.4, 0.4, 0.4), spec);
  CHECK(std::abs(v) < 1e-12);
  CHECK(std::abs(mi_loss(d, Image::filled(16, 16, 0.7, 0.2, 0.1), spec)) < 1e-12);
}

TEST_CASE("soft MI gradient matches central differences") {
  Rng rng(21);
  HistogramSpec spec;
  spec.n_bins = 8;
  spec.soft_bandwidth = 0.5;
  const auto d = random_depth(8, 8, rng);
  const auto img = random_image(8, 8, rng);
  const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);
  auto depth_t = torch::from_blob(const_cast<double*>(d.values().data()), {1, 8, 8}, f64).clone();
  const auto bins = depth_bins_tensor(depth_t, spec);
  const auto valid = torch::ones({1, 8, 8}, torch::kBool);
  auto base = torch::from_blob(const_cast<double*>(img.pixels().data()), {8, 8, 3}, f64)
                  .permute({2, 0, 1})
                  .unsqueeze(0)
                  .contiguous();
  auto x = base.clone().requires_grad_(true);
  soft_mi_tensor(bins, valid, x, spec).sum().backward();
  const auto grad = x.grad();

  // The autograd route must agree with the plain double API too.
  CHECK(soft_mi_tensor(bins, valid, base, spec).item<double>() ==
        doctest::Approx(soft_mi(d, img, spec)).epsilon(1e-12));

  torch::NoGradGuard ng;
  const double h = 1e-4;
  int checked = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 8; ++y) {
      for (int xx = 0; xx < 8; ++xx) {
        auto p = base.clone(), m = base.clone();
        p[0][c][y][xx] += h;
        m[0][c][y][xx] -= h;
        const double fd = (soft_mi_tensor(bins, valid, p, spec).item<double>() -
                           soft_mi_tensor(bins, valid, m, spec).item<double>()) /
                          (2 * h);
        const double g = grad[0][c][y][xx].item<double>();
        if (std::abs(fd) < 1e-9) continue;
        ++checked;
        CHECK(std::abs(g - fd) <= 1e-3 * std::abs(fd));
      }
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("monotone intensity drives the loss to minus the depth entropy") {
  HistogramSpec spec;
  spec.n_bins = 8;
  spec.depth_max = 80.0;
  spec.soft_bandwidth = 0.05;
  // Depth bins and intensity bins line up one to one.
  std::vector<double> depth(256), inten(256);
  for (int i = 0; i < 256; ++i) {
    const int b = i % 8;
    depth[i] = b * 10.0 + 5.0;
    inten[i] = (b + 0.5) / 8.0;
  }
  const DepthMap d(16, 16, depth);
  std::vector<double> dep_counts(8, 0.0);
  for (int i = 0; i < 256; ++i) dep_counts[spec.depth_bin(depth[i])] += 1.0;
  const double h = oracle::entropy(dep_counts);
  const double loss = mi_loss(d, gray_image(16, 16, inten), spec);
  CHECK(loss == doctest::Approx(-h).epsilon(1e-6));
  CHECK(hard_mi(d, gray_image(16, 16, inten), spec) == doctest::Approx(h).epsilon(1e-12));
  // Any other image does no better.
  Rng rng(2);
  for (int t = 0; t < 20; ++t) CHECK(mi_loss(d, random_image(16, 16, rng), spec) >= loss - 1e-9);
}

TEST_CASE("loss is invariant to a shared pixel permutation") {
  Rng rng(13);
  HistogramSpec spec;
  spec.n_bins = 16;
  const auto d = random_depth(12, 12, rng);
  const auto img = random_image(12, 12, rng);
  std::vector<std::size_t> perm(144);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<double> pd(144), pp(144 * 3);
  for (std::size_t i = 0; i < 144; ++i) {
    pd[i] = d.values()[perm[i]];
    for (int c = 0; c < 3; ++c) pp[i * 3 + c] = img.pixels()[perm[i] * 3 + c];
  }
  CHECK(mi_loss(DepthMap(12, 12, pd), Image(12, 12, pp), spec) == doctest::Approx(mi_loss(d, img, spec)).epsilon(1e-10));
  CHECK(hard_mi(DepthMap(12, 12, pd), Image(12, 12, pp), spec) == doctest::Approx(hard_mi(d, img, spec)).epsilon(1e-12));
}

TEST_CASE("histogram spec validation") {
  HistogramSpec s;
  s.n_bins = 1;
  CHECK_THROWS(s.validate());
  s = {};
  s.depth_max = s.depth_min;
  CHECK_THROWS(s.validate());
  s = {};
  s.soft_bandwidth = 0.0;
  CHECK_THROWS(s.validate());
  CHECK_NOTHROW(HistogramSpec{}.validate());
}
