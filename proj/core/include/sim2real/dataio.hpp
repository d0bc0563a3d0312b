#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sim2real/manifest.hpp"
#include "sim2real/rng.hpp"
#include "sim2real/types.hpp"

namespace sim2real {

// Pinhole intrinsics plus a 4-term radial distortion polynomial on the
// normalized radius: r_distorted = r * (1 + k1 r^2 + k2 r^4 + k3 r^6 + k4 r^8).
// All-zero coefficients describe an undistorted pinhole camera.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 4> distortion{};

  void validate(int width, int height) const;
  // Distorted pixel position of an ideal pinhole pixel.
  std::array<double, 2> distort_pixel(double u, double v) const;
};

CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const CameraIntrinsics& intr, const std::filesystem::path& path);

struct Undistorted {
  Image image;
  std::vector<std::uint8_t> valid_mask;  // false where the source lies outside the frame
};

// Inverse-maps every output pinhole pixel into the distorted source frame and
// samples bilinearly. Output keeps the input size and intrinsics.
Undistorted undistort_to_pinhole(const Image& image, const CameraIntrinsics& intr);
DepthMap undistort_depth(const DepthMap& depth, const CameraIntrinsics& intr);

struct CropMargins {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

struct PreprocessSpec {
  CropMargins margins;
  int target_width = 270;
  int target_height = 216;
};

// Central content crop then bilinear resize to the target size.
Image preprocess_frame(const Image& image, const PreprocessSpec& spec = {});
DepthMap preprocess_depth(const DepthMap& depth, const PreprocessSpec& spec = {});

struct SequenceSplit {
  std::vector<SequenceManifest> train;
  std::vector<SequenceManifest> test;
};

// Sequence-level split: seeded shuffle, floor(n * train_fraction) sequences to
// train (at least one per side), the rest to test.
SequenceSplit split_sequences(std::vector<SequenceManifest> sequences, double train_fraction,
                              std::uint64_t seed);

struct AugmentationSpec {
  int crop_size = 256;
  bool allow_hflip = true;
  bool allow_vflip = true;
  std::uint64_t seed = 0;
};

// One concrete draw of the random augmentation.
struct AugmentDraw {
  int top = 0;
  int left = 0;
  bool hflip = false;
  bool vflip = false;
};

AugmentDraw draw_augmentation(const AugmentationSpec& spec, int height, int width, Rng& rng);
// Applies the same crop and flips to image and depth.
PairedSample apply_augmentation(const PairedSample& sample, int crop_size, const AugmentDraw& draw);
PairedSample augment(const PairedSample& sample, const AugmentationSpec& spec, Rng& rng);

struct LoadOptions {
  std::optional<CameraIntrinsics> intrinsics;  // overrides the manifest's intrinsics file
  std::optional<PreprocessSpec> preprocess;
};

// Decodes every frame of a manifest. Throws DimensionMismatch when a decoded
// frame disagrees with the manifest's width/height or with its depth map.
std::vector<PairedSample> load_paired(const DatasetManifest& manifest,
                                      const LoadOptions& options = {});
std::vector<UnpairedSample> load_unpaired(const DatasetManifest& manifest,
                                          const LoadOptions& options = {});

}  // namespace sim2real
