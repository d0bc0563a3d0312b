#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "sim2real/dataio.hpp"
#include "sim2real/error.hpp"
#include "sim2real/image_ops.hpp"
#include "sim2real/manifest.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/toy_data.hpp"
#include "support/oracles.hpp"
#include "support/samples.hpp"
#include "support/tempdir.hpp"

using namespace sim2real;
namespace fs = std::filesystem;

namespace {

double pattern(double u, double v) { return 0.5 + 0.35 * std::sin(u / 6.0) * std::cos(v / 4.5); }

Image pattern_image(int h, int w) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) v[static_cast<std::size_t>(y) * w + x] = pattern(x, y);
  }
  return testing_support::gray_image(h, w, v);
}

std::vector<SequenceManifest> make_sequences(std::size_t n) {
  std::vector<SequenceManifest> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"seq" + std::to_string(i), {"f.png"}, {}});
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("undistortion with zero coefficients is the identity") {
  const Image im = pattern_image(48, 64);
  CameraIntrinsics intr{60.0, 60.0, 31.5, 23.5, {0, 0, 0, 0}};
  const Undistorted u = undistort_to_pinhole(im, intr);
  CHECK(std::all_of(u.valid_mask.begin(), u.valid_mask.end(), [](auto m) { return m != 0; }));
  for (std::size_t i = 0; i < im.pixels().size(); ++i) REQUIRE(u.image.pixels()[i] == doctest::Approx(im.pixels()[i]).epsilon(1e-12));
}

TEST_CASE("principal point is a fixed point of radial distortion") {
  const Image im = pattern_image(49, 65);
  CameraIntrinsics intr{50.0, 55.0, 32.0, 24.0, {-0.3, 0.1, -0.02, 0.004}};
  const Undistorted u = undistort_to_pinhole(im, intr);
  for (int c = 0; c < 3; ++c) CHECK(u.image.at(24, 32, c) == doctest::Approx(im.at(24, 32, c)).epsilon(1e-12));
}

TEST_CASE("undistortion inverts an independent forward distortion") {
  const int h = 120, w = 160;
  const double k[4] = {-0.22, 0.06, -0.01, 0.001};
  CameraIntrinsics intr{110.0, 110.0, 79.5, 59.5, {k[0], k[1], k[2], k[3]}};
  std::vector<double> distorted(static_cast<std::size_t>(h) * w);
  for (int vd = 0; vd < h; ++vd) {
    for (int ud = 0; ud < w; ++ud) {
      const double xd = (ud - intr.cx) / intr.fx, yd = (vd - intr.cy) / intr.fy;
      const double rd = std::hypot(xd, yd);
      const double s = rd > 0 ? oracle::undistort_radius(rd, k) / rd : 1.0;
      distorted[static_cast<std::size_t>(vd) * w + ud] = pattern(intr.fx * xd * s + intr.cx, intr.fy * yd * s + intr.cy);
    }
  }
  const Undistorted u = undistort_to_pinhole(testing_support::gray_image(h, w, distorted), intr);
  double err = 0.0;
  int n = 0;
  for (int y = h / 10; y < h - h / 10; ++y) {
    for (int x = w / 10; x < w - w / 10; ++x) {
      if (!u.valid_mask[static_cast<std::size_t>(y) * w + x]) continue;
      err += std::abs(u.image.at(y, x, 0) - pattern(x, y));
      ++n;
    }
  }
  REQUIRE(n > 0);
  CHECK(err / n < 0.02);
}

TEST_CASE("non-finite distortion coefficients are rejected") {
  CameraIntrinsics intr{50, 50, 10, 10, {0, NAN, 0, 0}};
  CHECK_THROWS_AS(undistort_to_pinhole(Image::filled(20, 20, 0.5, 0.5, 0.5), intr), RangeError);
}

TEST_CASE("preprocess_frame output size and identities") {
  const Image big = Image::filled(1080, 1350, 0.3, 0.6, 0.9);
  const Image small = preprocess_frame(big);
  CHECK(small.width() == 270);
  CHECK(small.height() == 216);
  for (std::size_t i = 0; i < small.pixels().size(); i += 3) REQUIRE(small.pixels()[i] == 0.3);

  Rng rng(3);
  const Image same = testing_support::random_image(216, 270, rng);
  const Image out = preprocess_frame(same);
  CHECK(std::equal(out.pixels().begin(), out.pixels().end(), same.pixels().begin()));

  PreprocessSpec bad;
  bad.margins = {600, 600, 0, 0};
  CHECK_THROWS_AS(preprocess_frame(big, bad), InputError);

  PreprocessSpec cropped;
  cropped.margins = {10, 20, 30, 40};
  const Image c = preprocess_frame(Image::filled(300, 400, 0.2, 0.2, 0.2), cropped);
  CHECK(c.width() == 270);
  CHECK(c.height() == 216);
}

TEST_CASE("split_sequences counts") {
  auto s10 = split_sequences(make_sequences(10), 0.9, 1);
  CHECK(s10.train.size() == 9);
  CHECK(s10.test.size() == 1);
  auto s93 = split_sequences(make_sequences(93), 0.9, 1);
  CHECK(s93.train.size() == 83);
  CHECK(s93.test.size() == 10);
  CHECK_THROWS_AS(split_sequences(make_sequences(1), 0.5, 0), InputError);
  CHECK_THROWS_AS(split_sequences(make_sequences(5), 1.0, 0), RangeError);
  CHECK_THROWS_AS(split_sequences(make_sequences(5), 0.0, 0), RangeError);
}

TEST_CASE("split_sequences is deterministic, disjoint and exhaustive") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const double f = rng.uniform(0.05, 0.95);
    const std::uint64_t seed = rng.next_u64();
    const auto a = split_sequences(make_sequences(n), f, seed);
    const auto b = split_sequences(make_sequences(n), f, seed);
    std::set<std::string> tr, te;
    for (const auto& s : a.train) tr.insert(s.sequence_id);
    for (const auto& s : a.test) te.insert(s.sequence_id);
    REQUIRE(tr.size() + te.size() == n);
    for (const auto& id : tr) REQUIRE(te.count(id) == 0);
    REQUIRE(a.train.size() >= 1);
    REQUIRE(a.test.size() >= 1);
    for (std::size_t i = 0; i < a.train.size(); ++i) REQUIRE(a.train[i].sequence_id == b.train[i].sequence_id);
  }
}

TEST_CASE("augmentation identity, involution and rejection") {
  Rng rng(5);
  PairedSample s{testing_support::random_image(32, 32, rng), testing_support::random_depth(32, 32, rng), "s", 0};
  AugmentationSpec none{32, false, false, 0};
  Rng r2(1);
  const PairedSample same = augment(s, none, r2);
  CHECK(std::equal(same.image.pixels().begin(), same.image.pixels().end(), s.image.pixels().begin()));
  CHECK(std::equal(same.depth.values().begin(), same.depth.values().end(), s.depth.values().begin()));

  const AugmentDraw flip{0, 0, true, false};
  const PairedSample twice = apply_augmentation(apply_augmentation(s, 32, flip), 32, flip);
  CHECK(std::equal(twice.image.pixels().begin(), twice.image.pixels().end(), s.image.pixels().begin()));
  CHECK(std::equal(twice.depth.values().begin(), twice.depth.values().end(), s.depth.values().begin()));

  AugmentationSpec too_big{33, true, true, 0};
  CHECK_THROWS_AS(augment(s, too_big, r2), InputError);
}

TEST_CASE("coordinate-grid augmentation keeps image and depth aligned") {
  const int h = 40, w = 56;
  std::vector<double> px, d;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      px.insert(px.end(), {y / double(h - 1), x / double(w - 1), 0.5});
      d.push_back(1.0 + y * w + x);
    }
  }
  const PairedSample s{Image(h, w, px), DepthMap(h, w, d), "grid", 0};
  AugmentationSpec spec{24, true, true, 0};
  Rng rng(11);
  int hflips = 0, vflips = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const PairedSample a = augment(s, spec, rng);
    REQUIRE(a.image.height() == 24);
    REQUIRE(a.depth.width() == 24);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        const int sy = static_cast<int>(std::lround(a.image.at(y, x, 0) * (h - 1)));
        const int sx = static_cast<int>(std::lround(a.image.at(y, x, 1) * (w - 1)));
        REQUIRE(a.depth.at(y, x) == 1.0 + sy * w + sx);
      }
    }
    hflips += a.image.at(0, 0, 1) > a.image.at(0, 1, 1);
    vflips += a.image.at(0, 0, 0) > a.image.at(1, 0, 0);
  }
  CHECK(hflips > 60);
  CHECK(hflips < 140);
  CHECK(vflips > 60);
  CHECK(vflips < 140);
}

TEST_CASE("toy generator contract") {
  const auto one = generate_toy_dataset(1, 64, 7);
  REQUIRE(one.domain_a.size() == 1);
  REQUIRE(one.domain_b.size() == 1);
  const auto& d = one.domain_a[0].depth;
  CHECK(d.width() == 64);
  for (std::size_t i = 0; i < d.values().size(); ++i) {
    if (!d.valid_mask()[i]) continue;
    REQUIRE(d.values()[i] >= 10.0);
    REQUIRE(d.values()[i] <= 200.0);
  }
  const auto again = generate_toy_dataset(1, 64, 7);
  CHECK(std::equal(again.domain_a[0].image.pixels().begin(), again.domain_a[0].image.pixels().end(),
                   one.domain_a[0].image.pixels().begin()));
  CHECK(std::equal(again.domain_b[0].image.pixels().begin(), again.domain_b[0].image.pixels().end(),
                   one.domain_b[0].image.pixels().begin()));
}

TEST_CASE("toy shading correlates with nearness") {
  const auto data = generate_toy_dataset(12, 64, 3);
  for (const auto& p : data.domain_a) {
    std::vector<double> inten, neg_depth;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (!p.depth.valid(y, x)) continue;
        inten.push_back((p.image.at(y, x, 0) + p.image.at(y, x, 1) + p.image.at(y, x, 2)) / 3.0);
        neg_depth.push_back(-p.depth.at(y, x));
      }
    }
    CHECK(pearson(inten, neg_depth) > 0.5);
  }
}

TEST_CASE("depth png round trip and loader size checks") {
  testing_support::TempDir tmp("dataio");
  Rng rng(4);
  const DepthMap d = testing_support::random_depth(16, 20, rng, 10.0, 200.0);
  write_depth_png(tmp.path / "d.png", d, 0.01);
  const DepthMap back = read_depth_png(tmp.path / "d.png", 0.01);
  for (std::size_t i = 0; i < d.values().size(); ++i) REQUIRE(std::abs(back.values()[i] - d.values()[i]) <= 0.005 + 1e-9);

  write_png_image(tmp.path / "f.png", Image::filled(16, 20, 0.5, 0.5, 0.5));
  DatasetManifest m;
  m.dataset_name = "t";
  m.domain = Domain::A;
  m.depth_scale_mm = 0.01;
  m.sequences.push_back({"s", {"f.png"}, {"d.png"}});
  save_manifest(m, tmp.path / "m.json");
  CHECK(load_paired(load_manifest(tmp.path / "m.json")).size() == 1);

  m.width = 32;
  m.height = 16;
  save_manifest(m, tmp.path / "bad.json");
  CHECK_THROWS_AS(load_paired(load_manifest(tmp.path / "bad.json")), DimensionMismatch);

  DatasetManifest b = m;
  b.width.reset();
  b.height.reset();
  b.domain = Domain::B;
  CHECK_THROWS_AS(b.validate(), InputError);
  b.sequences[0].depths.clear();
  CHECK_NOTHROW(b.validate());
}
