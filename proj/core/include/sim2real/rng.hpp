#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sim2real {

// Seeded random source whose draws are identical on every platform. The
// std distributions are implementation-defined, so the conversions from raw
// mt19937_64 output are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (next_u64() >> 63) != 0; }
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Child generator for an independent stream, e.g. one per epoch.
  Rng fork(std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sim2real
