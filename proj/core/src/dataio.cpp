#include "sim2real/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"
#include "sim2real/image_ops.hpp"
#include "sim2real/png_io.hpp"

namespace sim2real {

using nlohmann::json;

void CameraIntrinsics::validate(int width, int height) const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw RangeError(fmt::format("focal lengths must be positive (fx={}, fy={})", fx, fy));
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw RangeError(fmt::format("principal point ({}, {}) outside a {}x{} frame", cx, cy, width,
                                 height));
  }
  for (double k : distortion) {
    if (!std::isfinite(k)) throw RangeError("distortion coefficients must be finite");
  }
}

std::array<double, 2> CameraIntrinsics::distort_pixel(double u, double v) const {
  const double x = (u - cx) / fx;
  const double y = (v - cy) / fy;
  const double r2 = x * x + y * y;
  const auto& k = distortion;
  const double s = 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * (k[2] + r2 * k[3])));
  return {cx + fx * x * s, cy + fy * y * s};
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  CameraIntrinsics intr;
  try {
    const json j = json::parse(read_text(path));
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    const auto k = j.at("distortion").get<std::vector<double>>();
    if (k.size() != 4) throw InputError("intrinsics distortion must have 4 coefficients");
    std::copy(k.begin(), k.end(), intr.distortion.begin());
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed intrinsics '{}': {}", path.string(), e.what()));
  }
  return intr;
}

void save_intrinsics(const CameraIntrinsics& intr, const std::filesystem::path& path) {
  json j{{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx}, {"cy", intr.cy},
         {"distortion", std::vector<double>(intr.distortion.begin(), intr.distortion.end())}};
  write_text_atomic(path, j.dump(2) + "\n");
}

namespace {

// Sub-pixel slack so coordinates that land on the border through rounding stay valid.
constexpr double kBorderSlack = 1e-9;

struct SamplePoint {
  int x0, y0, x1, y1;
  double wx, wy;
  bool inside;
};

SamplePoint locate(double sx, double sy, int width, int height) {
  SamplePoint p{};
  p.inside = sx >= -kBorderSlack && sy >= -kBorderSlack && sx <= width - 1 + kBorderSlack &&
             sy <= height - 1 + kBorderSlack;
  if (!p.inside) return p;
  sx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
  p.x0 = static_cast<int>(std::floor(sx));
  p.y0 = static_cast<int>(std::floor(sy));
  p.x1 = std::min(p.x0 + 1, width - 1);
  p.y1 = std::min(p.y0 + 1, height - 1);
  p.wx = sx - p.x0;
  p.wy = sy - p.y0;
  return p;
}

}  // namespace

Undistorted undistort_to_pinhole(const Image& image, const CameraIntrinsics& intr) {
  const int w = image.width(), h = image.height();
  intr.validate(w, h);
  std::vector<double> out(static_cast<std::size_t>(w) * h * 3, 0.0);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const auto [sx, sy] = intr.distort_pixel(u, v);
      const SamplePoint p = locate(sx, sy, w, h);
      if (!p.inside) continue;
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      mask[i] = 1;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(p.y0, p.x0, c) + (image.at(p.y0, p.x1, c) - image.at(p.y0, p.x0, c)) * p.wx;
        const double bot = image.at(p.y1, p.x0, c) + (image.at(p.y1, p.x1, c) - image.at(p.y1, p.x0, c)) * p.wx;
        out[i * 3 + c] = std::clamp(top + (bot - top) * p.wy, 0.0, 1.0);
      }
    }
  }
  return {Image(h, w, std::move(out)), std::move(mask)};
}

DepthMap undistort_depth(const DepthMap& depth, const CameraIntrinsics& intr) {
  const int w = depth.width(), h = depth.height();
  intr.validate(w, h);
  std::vector<double> values(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<std::uint8_t> mask(values.size(), 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const auto [sx, sy] = intr.distort_pixel(u, v);
      const SamplePoint p = locate(sx, sy, w, h);
      if (!p.inside) continue;
      const int ys[4] = {p.y0, p.y0, p.y1, p.y1};
      const int xs[4] = {p.x0, p.x1, p.x0, p.x1};
      const double ws[4] = {(1 - p.wy) * (1 - p.wx), (1 - p.wy) * p.wx, p.wy * (1 - p.wx),
                            p.wy * p.wx};
      double acc = 0.0, wsum = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (!depth.valid(ys[k], xs[k]) || ws[k] <= 0.0) continue;
        acc += ws[k] * depth.at(ys[k], xs[k]);
        wsum += ws[k];
      }
      if (wsum <= 0.0) continue;
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      values[i] = acc / wsum;
      mask[i] = 1;
    }
  }
  return DepthMap(h, w, std::move(values), std::move(mask));
}

namespace {

void check_margins(const CropMargins& m, int width, int height) {
  if (m.top < 0 || m.bottom < 0 || m.left < 0 || m.right < 0 ||
      m.left + m.right + kMinImageSide > width || m.top + m.bottom + kMinImageSide > height) {
    throw InputError(fmt::format("crop margins (t{} b{} l{} r{}) exceed a {}x{} frame", m.top,
                                 m.bottom, m.left, m.right, width, height));
  }
}

}  // namespace

Image preprocess_frame(const Image& image, const PreprocessSpec& spec) {
  const auto& m = spec.margins;
  check_margins(m, image.width(), image.height());
  const int cw = image.width() - m.left - m.right;
  const int ch = image.height() - m.top - m.bottom;
  const Image cropped = (cw == image.width() && ch == image.height())
                            ? image
                            : crop(image, m.top, m.left, ch, cw);
  return resize_bilinear(cropped, spec.target_width, spec.target_height);
}

DepthMap preprocess_depth(const DepthMap& depth, const PreprocessSpec& spec) {
  const auto& m = spec.margins;
  check_margins(m, depth.width(), depth.height());
  const int cw = depth.width() - m.left - m.right;
  const int ch = depth.height() - m.top - m.bottom;
  const DepthMap cropped = (cw == depth.width() && ch == depth.height())
                               ? depth
                               : crop(depth, m.top, m.left, ch, cw);
  return resize_depth(cropped, spec.target_width, spec.target_height);
}

SequenceSplit split_sequences(std::vector<SequenceManifest> sequences, double train_fraction,
                              std::uint64_t seed) {
  if (sequences.size() < 2) {
    throw InputError(fmt::format("need at least 2 sequences to split, got {}", sequences.size()));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw RangeError(fmt::format("train_fraction {} must lie in (0, 1)", train_fraction));
  }
  const std::size_t n = sequences.size();
  // Small epsilon: 0.9 * 10 must floor to 9, not 8.
  auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Rng rng(seed);
  rng.shuffle(sequences);
  SequenceSplit split;
  split.train.assign(std::make_move_iterator(sequences.begin()),
                     std::make_move_iterator(sequences.begin() + static_cast<std::ptrdiff_t>(n_train)));
  split.test.assign(std::make_move_iterator(sequences.begin() + static_cast<std::ptrdiff_t>(n_train)),
                    std::make_move_iterator(sequences.end()));
  return split;
}

AugmentDraw draw_augmentation(const AugmentationSpec& spec, int height, int width, Rng& rng) {
  if (spec.crop_size < kMinImageSide || spec.crop_size > std::min(height, width)) {
    throw InputError(fmt::format("crop size {} does not fit a {}x{} sample", spec.crop_size, width,
                                 height));
  }
  AugmentDraw d;
  d.top = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - spec.crop_size + 1)));
  d.left = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - spec.crop_size + 1)));
  // Coins are always drawn so the stream does not depend on which flips are enabled.
  const bool h = rng.coin();
  const bool v = rng.coin();
  d.hflip = spec.allow_hflip && h;
  d.vflip = spec.allow_vflip && v;
  return d;
}

PairedSample apply_augmentation(const PairedSample& sample, int crop_size, const AugmentDraw& draw) {
  validate_pair(sample);
  PairedSample out;
  out.sequence_id = sample.sequence_id;
  out.frame_index = sample.frame_index;
  const bool full = crop_size == sample.image.height() && crop_size == sample.image.width();
  out.image = full ? sample.image : crop(sample.image, draw.top, draw.left, crop_size, crop_size);
  out.depth = full ? sample.depth : crop(sample.depth, draw.top, draw.left, crop_size, crop_size);
  if (draw.hflip) {
    out.image = flip_horizontal(out.image);
    out.depth = flip_horizontal(out.depth);
  }
  if (draw.vflip) {
    out.image = flip_vertical(out.image);
    out.depth = flip_vertical(out.depth);
  }
  return out;
}

PairedSample augment(const PairedSample& sample, const AugmentationSpec& spec, Rng& rng) {
  const AugmentDraw d = draw_augmentation(spec, sample.image.height(), sample.image.width(), rng);
  return apply_augmentation(sample, spec.crop_size, d);
}

namespace {

void check_decoded(const DatasetManifest& m, const std::filesystem::path& path, int w, int h) {
  if ((m.width && *m.width != w) || (m.height && *m.height != h)) {
    throw DimensionMismatch(fmt::format("'{}' decodes to {}x{} but manifest '{}' declares {}x{}",
                                        path.string(), w, h, m.dataset_name,
                                        m.width.value_or(w), m.height.value_or(h)));
  }
}

std::optional<CameraIntrinsics> resolve_intrinsics(const DatasetManifest& m,
                                                   const LoadOptions& options) {
  if (options.intrinsics) return options.intrinsics;
  if (m.intrinsics) return load_intrinsics(m.resolve(*m.intrinsics));
  return std::nullopt;
}

}  // namespace

std::vector<PairedSample> load_paired(const DatasetManifest& manifest, const LoadOptions& options) {
  manifest.validate();
  if (!manifest.has_depth()) {
    throw InputError(fmt::format("manifest '{}' has no depth maps", manifest.dataset_name));
  }
  const auto intr = resolve_intrinsics(manifest, options);
  std::vector<PairedSample> out;
  out.reserve(manifest.frame_count());
  for (const auto& seq : manifest.sequences) {
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      const auto img_path = manifest.resolve(seq.frames[i]);
      const auto dep_path = manifest.resolve(seq.depths[i]);
      Image image = read_png_image(img_path);
      check_decoded(manifest, img_path, image.width(), image.height());
      DepthMap depth = read_depth_png(dep_path, manifest.depth_scale_mm);
      check_decoded(manifest, dep_path, depth.width(), depth.height());
      if (intr) {
        Undistorted u = undistort_to_pinhole(image, *intr);
        image = std::move(u.image);
        depth = undistort_depth(depth, *intr);
      }
      if (options.preprocess) {
        image = preprocess_frame(image, *options.preprocess);
        depth = preprocess_depth(depth, *options.preprocess);
      }
      PairedSample s{std::move(image), std::move(depth), seq.sequence_id, static_cast<int>(i)};
      out.push_back(validate_pair(s));
    }
  }
  return out;
}

std::vector<UnpairedSample> load_unpaired(const DatasetManifest& manifest,
                                          const LoadOptions& options) {
  manifest.validate();
  const auto intr = resolve_intrinsics(manifest, options);
  std::vector<UnpairedSample> out;
  out.reserve(manifest.frame_count());
  for (const auto& seq : manifest.sequences) {
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      const auto img_path = manifest.resolve(seq.frames[i]);
      Image image = read_png_image(img_path);
      check_decoded(manifest, img_path, image.width(), image.height());
      if (intr) image = undistort_to_pinhole(image, *intr).image;
      if (options.preprocess) image = preprocess_frame(image, *options.preprocess);
      out.push_back({std::move(image), seq.sequence_id, static_cast<int>(i)});
    }
  }
  return out;
}

}  // namespace sim2real
