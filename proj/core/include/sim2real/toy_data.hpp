#pragma once

#include <cstdint>
#include <vector>

#include "sim2real/types.hpp"

namespace sim2real {

// Procedural colon-like scenes: a camera inside a tube with haustral folds,
// lit by a point light at the camera. Depth is the analytic z-distance in mm.
//
// Style A ("synthetic") is flat-albedo Lambertian shading. Style B ("clinical")
// renders the same scene family with a redder tint, a stronger light falloff,
// vessel-like albedo texture and specular highlights.
struct ToyRenderOptions {
  double depth_min_mm = 10.0;
  double depth_max_mm = 200.0;
};

enum class ToyStyle { A, B };

struct ToyDataset {
  std::vector<PairedSample> domain_a;
  std::vector<UnpairedSample> domain_b;
};

// n_pairs domain-A pairs and n_pairs domain-B frames rendered from disjoint
// scene streams. Bit-identical for equal arguments.
ToyDataset generate_toy_dataset(int n_pairs, int resolution, std::uint64_t seed,
                                const ToyRenderOptions& options = {});

// Style-B frames with their ground-truth depth, from a scene stream disjoint
// from generate_toy_dataset's for the same seed. Used as a held-out eval set.
std::vector<PairedSample> generate_toy_eval(int n_frames, int resolution, std::uint64_t seed,
                                            const ToyRenderOptions& options = {});

// Renders one scene; exposed for tests.
PairedSample render_toy_scene(ToyStyle style, int resolution, std::uint64_t scene_seed,
                              const ToyRenderOptions& options = {});

}  // namespace sim2real
