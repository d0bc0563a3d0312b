#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sim2real/eval.hpp"
#include "sim2real/types.hpp"

namespace sim2real {

// Fixed image -> vector mapping used by FID/KID. id() is stored with every
// metric so values from different extractors are never compared.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<double> extract(const Image& image) const = 0;
};

// Two random 3x3 stride-2 conv + ReLU layers on a 64x64 resize of the image,
// summarised by per-channel mean and standard deviation of both layers plus
// the colour moments of the input. Weights come from the seed only, so the
// features are reproducible across processes and platforms.
class RandomConvExtractor final : public FeatureExtractor {
 public:
  explicit RandomConvExtractor(std::uint64_t seed = 0, int channels1 = 16, int channels2 = 32);
  std::string id() const override;
  int dim() const override;
  std::vector<double> extract(const Image& image) const override;

 private:
  std::uint64_t seed_;
  int c1_, c2_;
  std::vector<double> w1_, b1_, w2_, b2_;
};

struct FeatureBatch {
  std::string extractor_id;
  FeatureSet features;
};

FeatureBatch extract_features(std::span<const Image> images, const FeatureExtractor& extractor);

// Precomputed features from an external extractor: CSV, one vector per row.
// A first line of the form "# extractor: <id>" names the extractor; otherwise
// the id is "external:<file name>".
FeatureBatch load_feature_csv(const std::filesystem::path& path);
void save_feature_csv(const std::filesystem::path& path, const FeatureBatch& batch);

}  // namespace sim2real
