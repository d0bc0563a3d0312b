#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sim2real {

inline constexpr int kMinImageSide = 8;

// A: synthetic, depth-annotated. B: clinical/target, unannotated.
enum class Domain { A, B };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

// H×W×3 RGB image, channel-interleaved, values in [0,1]. Immutable.
class Image {
 public:
  Image() = default;
  // Throws RangeError on non-finite or out-of-range values, InputError on
  // too-small sides or a pixel buffer of the wrong length.
  Image(int height, int width, std::vector<double> pixels);

  static Image filled(int height, int width, double r, double g, double b);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }
  double at(int y, int x, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::span<const double> pixels() const { return pixels_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

// Metric depth in millimetres plus a validity mask. Invalid pixels may hold
// anything (including NaN); valid pixels are finite and >= 0.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int height, int width, std::vector<double> values, std::vector<std::uint8_t> valid);
  // All pixels valid.
  DepthMap(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return values_.empty(); }
  double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  bool valid(int y, int x) const { return valid_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> valid_mask() const { return valid_; }
  std::size_t valid_count() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

struct PairedSample {
  static constexpr Domain domain = Domain::A;
  Image image;
  DepthMap depth;
  std::string sequence_id;
  int frame_index = 0;
};

struct UnpairedSample {
  static constexpr Domain domain = Domain::B;
  Image image;
  std::string sequence_id;
  int frame_index = 0;
};

struct LossWeights {
  double lambda_gan = 10.0;
  double lambda_cyc = 0.5;
  double lambda_mi = 1.0;

  // Throws RangeError unless all weights are finite and >= 0.
  void validate() const;
};

// Returns the sample unchanged when image and depth agree in size.
// Throws DimensionMismatch otherwise.
const PairedSample& validate_pair(const PairedSample& sample);

}  // namespace sim2real
