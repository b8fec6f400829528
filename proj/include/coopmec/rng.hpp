#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace coopmec {

// Deterministic stream of doubles with explicit seeding.  Child streams are
// derived from (seed, stream id) so independent draws (topology vs. fading)
// never share state and results do not depend on draw order between streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(mix(seed) ^ kInit)) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::uint64_t stream) const { return Rng(mix(mix(seed_) ^ mix(stream + 1))); }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unit-mean exponential via inverse CDF; -log1p(-u) is exact near u = 0
  double exponential() { return -std::log1p(-uniform()); }

 private:
  static constexpr std::uint64_t kInit = 0x9e3779b97f4a7c15ull;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace coopmec
