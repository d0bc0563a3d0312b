#include "sim2real/features.hpp"

#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"
#include "sim2real/image_ops.hpp"
#include "sim2real/rng.hpp"

namespace sim2real {

namespace {

constexpr int kSide = 64;

// 3x3 conv, stride 2, zero padding 1, then ReLU.
// in: [h][w][cin] interleaved, out: [h/2][w/2][cout].
std::vector<double> conv_relu(const std::vector<double>& in, int h, int w, int cin,
                              const std::vector<double>& weights, const std::vector<double>& bias,
                              int cout) {
  const int oh = h / 2, ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow * cout);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int o = 0; o < cout; ++o) {
        double acc = bias[static_cast<std::size_t>(o)];
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = 2 * y + dy;
          if (sy < 0 || sy >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = 2 * x + dx;
            if (sx < 0 || sx >= w) continue;
            const double* src = &in[(static_cast<std::size_t>(sy) * w + sx) * cin];
            const double* wk = &weights[((static_cast<std::size_t>(o) * 3 + (dy + 1)) * 3 + (dx + 1)) * cin];
            for (int c = 0; c < cin; ++c) acc += src[c] * wk[c];
          }
        }
        out[(static_cast<std::size_t>(y) * ow + x) * cout + o] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
  return out;
}

void append_moments(const std::vector<double>& map, int channels, std::vector<double>& feat) {
  const std::size_t n = map.size() / static_cast<std::size_t>(channels);
  for (int c = 0; c < channels; ++c) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = map[i * channels + c];
      s += v;
      s2 += v * v;
    }
    const double mean = s / static_cast<double>(n);
    feat.push_back(mean);
    feat.push_back(std::sqrt(std::max(0.0, s2 / static_cast<double>(n) - mean * mean)));
  }
}

}  // namespace

RandomConvExtractor::RandomConvExtractor(std::uint64_t seed, int channels1, int channels2)
    : seed_(seed), c1_(channels1), c2_(channels2) {
  if (c1_ < 1 || c2_ < 1) throw InputError("feature extractor needs at least one channel per layer");
  Rng rng(seed ^ 0xFEA7u);
  const double s1 = std::sqrt(2.0 / 27.0), s2 = std::sqrt(2.0 / (9.0 * c1_));
  w1_.resize(static_cast<std::size_t>(c1_) * 27);
  for (auto& v : w1_) v = rng.normal() * s1;
  b1_.assign(static_cast<std::size_t>(c1_), 0.0);
  for (auto& v : b1_) v = rng.normal() * 0.1;
  w2_.resize(static_cast<std::size_t>(c2_) * 9 * c1_);
  for (auto& v : w2_) v = rng.normal() * s2;
  b2_.assign(static_cast<std::size_t>(c2_), 0.0);
  for (auto& v : b2_) v = rng.normal() * 0.1;
}

std::string RandomConvExtractor::id() const {
  return fmt::format("randconv-v1(seed={},c1={},c2={},side={})", seed_, c1_, c2_, kSide);
}

int RandomConvExtractor::dim() const { return 6 + 2 * c1_ + 2 * c2_; }

std::vector<double> RandomConvExtractor::extract(const Image& image) const {
  const Image small = resize_bilinear(image, kSide, kSide);
  std::vector<double> x(small.pixels().begin(), small.pixels().end());
  std::vector<double> feat;
  feat.reserve(static_cast<std::size_t>(dim()));
  append_moments(x, 3, feat);
  for (auto& v : x) v = v * 2.0 - 1.0;
  const auto l1 = conv_relu(x, kSide, kSide, 3, w1_, b1_, c1_);
  append_moments(l1, c1_, feat);
  const auto l2 = conv_relu(l1, kSide / 2, kSide / 2, c1_, w2_, b2_, c2_);
  append_moments(l2, c2_, feat);
  return feat;
}

FeatureBatch extract_features(std::span<const Image> images, const FeatureExtractor& extractor) {
  FeatureBatch out;
  out.extractor_id = extractor.id();
  out.features.reserve(images.size());
  for (const auto& img : images) out.features.push_back(extractor.extract(img));
  return out;
}

FeatureBatch load_feature_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  FeatureBatch out;
  out.extractor_id = "external:" + path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# extractor:";
      if (line.rfind(key, 0) == 0) {
        auto id = line.substr(key.size());
        id.erase(0, id.find_first_not_of(' '));
        out.extractor_id = id;
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError(fmt::format("{}:{}: cannot parse '{}' as a number", path.string(), line_no, cell));
      }
    }
    if (!out.features.empty() && row.size() != out.features.front().size()) {
      throw DimensionMismatch(fmt::format("{}:{}: expected {} values, found {}", path.string(), line_no,
                                          out.features.front().size(), row.size()));
    }
    out.features.push_back(std::move(row));
  }
  if (out.features.empty()) throw InputError(fmt::format("{}: no feature rows", path.string()));
  return out;
}

void save_feature_csv(const std::filesystem::path& path, const FeatureBatch& batch) {
  std::string text = fmt::format("# extractor: {}\n", batch.extractor_id);
  for (const auto& row : batch.features) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      text += fmt::format("{}{:.17g}", i ? "," : "", row[i]);
    }
    text += '\n';
  }
  write_text_atomic(path, text);
}

}  // namespace sim2real
