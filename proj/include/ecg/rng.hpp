#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ecg {

// xoshiro256++ seeded through splitmix64. The algorithm is spelled out here
// (rather than using <random> engines plus distributions) so that a given
// seed reproduces the same stream on every platform and standard library.
//
// Streams for different purposes are derived from one 64-bit seed with
// Rng::mix(seed, tag); the tag values used by each module are documented at
// their call sites.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform in [0,1) with 53-bit resolution
  double next_double();

  double uniform(double lo, double hi);

  // standard normal via Box-Muller; generates pairs and caches the spare
  double normal();

  // unbiased integer in [0,bound), bound >= 1, by rejection
  std::uint64_t below(std::uint64_t bound);

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // Deterministically derives an independent sub-seed (splitmix64 finalizer
  // over seed and tag). Equal (seed, tag) pairs always map to the same value.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ecg
