#include <doctest.h>

#include <cmath>
#include <limits>

#include "sim2real/error.hpp"
#include "sim2real/manifest.hpp"
#include "sim2real/rng.hpp"
#include "sim2real/types.hpp"
#include "support/samples.hpp"

using namespace sim2real;
using testing_support::random_depth;
using testing_support::random_image;

TEST_CASE("validate_pair returns a consistent sample unchanged") {
  Rng rng(1);
  PairedSample s{random_image(64, 64, rng), random_depth(64, 64, rng), "seq", 3};
  const PairedSample& out = validate_pair(s);
  CHECK(&out == &s);
  CHECK(out.frame_index == 3);
}

TEST_CASE("validate_pair rejects mismatched depth") {
  Rng rng(2);
  PairedSample s{random_image(64, 64, rng), random_depth(32, 32, rng), "seq", 0};
  CHECK_THROWS_AS(validate_pair(s), DimensionMismatch);
}

TEST_CASE("negative valid depth is a range error") {
  std::vector<double> d(64, 5.0);
  d[10] = -1.0;
  CHECK_THROWS_AS(DepthMap(8, 8, d), RangeError);
  std::vector<std::uint8_t> mask(64, 1);
  mask[10] = 0;
  CHECK_NOTHROW(DepthMap(8, 8, d, mask));
}

TEST_CASE("non-finite depth only allowed where invalid") {
  std::vector<double> d(64, 5.0);
  d[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DepthMap(8, 8, d), RangeError);
  std::vector<std::uint8_t> mask(64, 1);
  mask[0] = 0;
  CHECK_NOTHROW(DepthMap(8, 8, d, mask));
}

TEST_CASE("image invariants") {
  CHECK_THROWS_AS(Image(7, 8, std::vector<double>(7 * 8 * 3, 0.5)), InputError);
  CHECK_THROWS_AS(Image(8, 8, std::vector<double>(10, 0.5)), InputError);
  CHECK_THROWS_AS(Image::filled(8, 8, 0.5, 1.5, 0.0), RangeError);
  const Image im = Image::filled(8, 9, 0.25, 0.5, 1.0);
  CHECK(im.height() == 8);
  CHECK(im.width() == 9);
  CHECK(im.at(7, 8, 2) == 1.0);
}

TEST_CASE("random single-field corruption is detected at construction") {
  Rng rng(7);
  const double bad_values[] = {-0.01, 1.01, std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::quiet_NaN()};
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 8 + static_cast<int>(rng.below(8)), w = 8 + static_cast<int>(rng.below(8));
    std::vector<double> px(static_cast<std::size_t>(h) * w * 3);
    for (auto& v : px) v = rng.uniform();
    px[rng.below(px.size())] = bad_values[rng.below(4)];
    CHECK_THROWS_AS(Image(h, w, px), RangeError);

    std::vector<double> d(static_cast<std::size_t>(h) * w);
    for (auto& v : d) v = rng.uniform(0.0, 100.0);
    d[rng.below(d.size())] = rng.coin() ? -rng.uniform(0.001, 10.0) : std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(DepthMap(h, w, d), RangeError);

    CHECK_THROWS_AS(DepthMap(h, w, std::vector<double>(d.size() + 1, 1.0)), InputError);
  }
}

TEST_CASE("loss weights validation") {
  CHECK_NOTHROW(LossWeights{}.validate());
  CHECK_NOTHROW((LossWeights{0, 0, 0}.validate()));
  CHECK_THROWS_AS((LossWeights{-1, 0, 0}.validate()), RangeError);
  CHECK_THROWS_AS((LossWeights{1, std::nan(""), 0}.validate()), RangeError);
  CHECK_THROWS_AS((LossWeights{1, 1, INFINITY}.validate()), RangeError);
  const LossWeights defaults;
  CHECK(defaults.lambda_gan == 10.0);
  CHECK(defaults.lambda_cyc == 0.5);
  CHECK(defaults.lambda_mi == 1.0);
}

TEST_CASE("domain tags survive a manifest round trip") {
  for (Domain d : {Domain::A, Domain::B}) {
    DatasetManifest m;
    m.dataset_name = "x";
    m.domain = d;
    m.sequences.push_back({"s0", {"a.png"}, d == Domain::A ? std::vector<std::string>{"a_d.png"} : std::vector<std::string>{}});
    const DatasetManifest back = manifest_from_json(manifest_to_json(m), ".");
    CHECK(back.domain == d);
    CHECK(domain_from_string(to_string(d)) == d);
  }
  CHECK_THROWS_AS(domain_from_string("C"), InputError);
}

TEST_CASE("rng is reproducible and forks are independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng base(5);
  Rng f1 = base.fork(1), f2 = base.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
  Rng u(3);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = u.uniform();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
}
