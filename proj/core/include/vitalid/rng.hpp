#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace vitalid {

// Seeded pseudo-random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the uniform/normal/shuffle
// conversions are implemented here rather than with <random> distributions
// (those are implementation-defined), so a seed reproduces the same stream on
// any conforming toolchain.
//   uniform(): (next() >> 11) * 2^-53, in [0, 1)
//   normal():  Box-Muller, z = sqrt(-2 ln(1 - u1)) cos(2 pi u2), one draw per call
//   below(n):  rejection sampling against a power-of-two mask, unbiased
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer over (seed, a, b); used to give every (subject,
// segment) pair an independent stream regardless of generation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace vitalid
