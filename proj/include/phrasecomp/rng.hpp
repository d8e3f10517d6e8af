#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace phrasecomp {

// Seeded generator with distribution code written out explicitly, so that a
// given seed yields the same stream on every standard library. The standard
// <random> distributions are implementation-defined and are not used.
//
//   engine:    std::mt19937_64 (fully specified by the standard)
//   uniform01: top 53 bits of one draw, scaled by 2^-53
//   below(n):  rejection sampling on the top of the 64-bit range
//   normal:    Box-Muller, both outputs consumed in order
//   shuffle:   Fisher-Yates from the last index down
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Child seed for a named stream, derived from a root seed with splitmix64
// over the FNV-1a hash of the label. Used to hand every module its own
// independent stream from a single experiment seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

}  // namespace phrasecomp
