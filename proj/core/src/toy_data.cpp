#include "sim2real/toy_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "sim2real/error.hpp"
#include "sim2real/rng.hpp"

namespace sim2real {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct Vessel {
  double theta0, amplitude, wavelength, phase, width_mm;
};

struct Scene {
  Vec3 origin;  // a point on the tube axis
  Vec3 axis;    // unit axis direction, pointing away from the camera
  Vec3 u, v;    // orthonormal basis perpendicular to axis
  double radius;
  double fold_depth;
  double fold_period;
  double fold_phase;
  std::vector<Vessel> vessels;
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Scene sample_scene(Rng& rng) {
  Scene s;
  s.radius = rng.uniform(12.0, 20.0);
  const double tilt = rng.uniform(0.0, 0.6);
  const double azimuth = rng.uniform(0.0, kTwoPi);
  s.axis = normalized({std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
                       std::cos(tilt)});
  const double off = rng.uniform(0.0, 0.55) * s.radius;
  const double off_az = rng.uniform(0.0, kTwoPi);
  s.origin = {off * std::cos(off_az), off * std::sin(off_az), 0.0};
  const Vec3 helper = std::abs(s.axis[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  s.u = normalized(cross(s.axis, helper));
  s.v = cross(s.axis, s.u);
  s.fold_depth = rng.uniform(0.12, 0.3);
  s.fold_period = rng.uniform(22.0, 40.0);
  s.fold_phase = rng.uniform(0.0, kTwoPi);
  const int n_vessels = 5 + static_cast<int>(rng.below(5));
  for (int i = 0; i < n_vessels; ++i) {
    s.vessels.push_back({rng.uniform(0.0, kTwoPi), rng.uniform(0.1, 0.6), rng.uniform(10.0, 30.0),
                         rng.uniform(0.0, kTwoPi), rng.uniform(0.3, 0.8)});
  }
  return s;
}

double tube_radius(const Scene& s, double along) {
  const double c = std::max(0.0, std::cos(kTwoPi * along / s.fold_period + s.fold_phase));
  return s.radius * (1.0 - s.fold_depth * c * c * c * c);
}

// Negative inside the lumen, positive inside the wall.
double wall_field(const Scene& s, const Vec3& p) {
  const Vec3 q = p - s.origin;
  const double along = dot(q, s.axis);
  const Vec3 radial = q - along * s.axis;
  return norm(radial) - tube_radius(s, along);
}

struct Hit {
  double t;  // ray parameter; ray direction has unit z so t is the z-depth
  bool found;
};

Hit march(const Scene& s, const Vec3& dir, double t_max) {
  double t = 0.5;
  double prev = wall_field(s, t * dir);
  if (prev >= 0.0) return {t, true};
  constexpr double kStep = 0.4;
  while (t < t_max) {
    const double t_next = t + kStep;
    const double f = wall_field(s, t_next * dir);
    if (f >= 0.0) {
      double lo = t, hi = t_next;
      for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (wall_field(s, mid * dir) >= 0.0 ? hi : lo) = mid;
      }
      return {0.5 * (lo + hi), true};
    }
    t = t_next;
  }
  return {t_max, false};
}

Vec3 field_gradient(const Scene& s, const Vec3& p) {
  constexpr double h = 1e-3;
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 a = p, b = p;
    a[k] += h;
    b[k] -= h;
    g[k] = (wall_field(s, a) - wall_field(s, b)) / (2 * h);
  }
  return g;
}

double vessel_darkening(const Scene& s, const Vec3& p) {
  const Vec3 q = p - s.origin;
  const double along = dot(q, s.axis);
  const double theta = std::atan2(dot(q, s.v), dot(q, s.u));
  double dark = 0.0;
  for (const auto& ves : s.vessels) {
    const double center = ves.theta0 + ves.amplitude * std::sin(kTwoPi * along / ves.wavelength + ves.phase);
    double d = std::remainder(theta - center, kTwoPi);
    const double arc_mm = std::abs(d) * s.radius;
    dark = std::max(dark, std::exp(-(arc_mm * arc_mm) / (2.0 * ves.width_mm * ves.width_mm)));
  }
  return dark;
}

struct StyleParams {
  Vec3 albedo;
  double falloff_mm;
  double ambient;
  double vessel_strength;
  double specular;
  double shininess;
  double noise;
};

StyleParams style_params(ToyStyle style) {
  if (style == ToyStyle::A) return {{0.95, 0.72, 0.64}, 45.0, 0.03, 0.0, 0.0, 1.0, 0.0};
  return {{0.86, 0.44, 0.36}, 32.0, 0.02, 0.45, 0.9, 60.0, 0.01};
}

}  // namespace

PairedSample render_toy_scene(ToyStyle style, int resolution, std::uint64_t scene_seed,
                              const ToyRenderOptions& options) {
  if (resolution < kMinImageSide) {
    throw InputError(fmt::format("toy resolution {} is below {}", resolution, kMinImageSide));
  }
  if (!(options.depth_min_mm > 0.0) || !(options.depth_max_mm > options.depth_min_mm)) {
    throw RangeError("toy depth range must satisfy 0 < min < max");
  }
  Rng rng(scene_seed);
  const Scene scene = sample_scene(rng);
  const StyleParams sp = style_params(style);
  // 100 degree field of view
  const double focal = 0.5 * resolution / std::tan(50.0 * std::numbers::pi / 180.0);
  const double c = 0.5 * resolution;

  const auto n = static_cast<std::size_t>(resolution) * resolution;
  std::vector<double> pixels(n * 3);
  std::vector<double> depth(n);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const Vec3 dir{(x + 0.5 - c) / focal, (y + 0.5 - c) / focal, 1.0};
      const Hit hit = march(scene, dir, options.depth_max_mm);
      const double z = std::clamp(hit.t, options.depth_min_mm, options.depth_max_mm);
      const Vec3 p = hit.t * dir;
      const double dist = norm(p);
      const Vec3 to_light = normalized(-1.0 * p);
      const Vec3 normal_in = normalized(-1.0 * field_gradient(scene, p));
      const double lambert = hit.found ? std::max(0.0, dot(normal_in, to_light)) : 0.0;
      const double falloff = 1.0 / (1.0 + (dist / sp.falloff_mm) * (dist / sp.falloff_mm));
      const double albedo_scale = 1.0 - sp.vessel_strength * vessel_darkening(scene, p);
      const double spec = sp.specular * std::pow(lambert, sp.shininess) *
                          (1.0 / (1.0 + (dist / 20.0) * (dist / 20.0)));
      const std::size_t i = static_cast<std::size_t>(y) * resolution + x;
      const double grain = sp.noise > 0.0 ? sp.noise * rng.normal() : 0.0;
      for (int k = 0; k < 3; ++k) {
        const double diffuse = sp.albedo[k] * albedo_scale * (sp.ambient + (1.0 - sp.ambient) * lambert * falloff);
        pixels[i * 3 + k] = std::clamp(diffuse + spec + grain, 0.0, 1.0);
      }
      depth[i] = z;
    }
  }
  PairedSample s;
  s.image = Image(resolution, resolution, std::move(pixels));
  s.depth = DepthMap(resolution, resolution, std::move(depth));
  s.sequence_id = fmt::format("toy{}_{:016x}", style == ToyStyle::A ? "A" : "B", scene_seed);
  s.frame_index = 0;
  return s;
}

namespace {

// Independent scene streams per role so A, B and eval never share a scene.
constexpr std::uint64_t kStreamA = 0xA;
constexpr std::uint64_t kStreamB = 0xB;
constexpr std::uint64_t kStreamEval = 0xE;

std::vector<std::uint64_t> scene_seeds(std::uint64_t seed, std::uint64_t stream, int n) {
  Rng root(seed);
  Rng r = root.fork(stream);
  std::vector<std::uint64_t> out(static_cast<std::size_t>(n));
  for (auto& s : out) s = r.next_u64();
  return out;
}

}  // namespace

ToyDataset generate_toy_dataset(int n_pairs, int resolution, std::uint64_t seed,
                                const ToyRenderOptions& options) {
  if (n_pairs < 1) throw InputError("generate_toy_dataset needs n_pairs >= 1");
  ToyDataset ds;
  const auto seeds_a = scene_seeds(seed, kStreamA, n_pairs);
  const auto seeds_b = scene_seeds(seed, kStreamB, n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    PairedSample a = render_toy_scene(ToyStyle::A, resolution, seeds_a[i], options);
    a.sequence_id = fmt::format("toyA_{:04d}", i);
    ds.domain_a.push_back(std::move(a));
    PairedSample b = render_toy_scene(ToyStyle::B, resolution, seeds_b[i], options);
    ds.domain_b.push_back({std::move(b.image), fmt::format("toyB_{:04d}", i), 0});
  }
  return ds;
}

std::vector<PairedSample> generate_toy_eval(int n_frames, int resolution, std::uint64_t seed,
                                            const ToyRenderOptions& options) {
  if (n_frames < 1) throw InputError("generate_toy_eval needs n_frames >= 1");
  std::vector<PairedSample> out;
  const auto seeds = scene_seeds(seed, kStreamEval, n_frames);
  for (int i = 0; i < n_frames; ++i) {
    PairedSample s = render_toy_scene(ToyStyle::B, resolution, seeds[i], options);
    s.sequence_id = fmt::format("toyEval_{:04d}", i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sim2real
