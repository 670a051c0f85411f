#pragma once

#include <cstdint>
#include <vector>

namespace veinseg {

/// SplitMix64 (Steele, Lea & Flood), the portable generator behind every
/// random decision in the library: schedules, splits, initialization and
/// phantoms.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// All derived draws are defined on top of next_u64() so another language can
/// reproduce them bit for bit:
///   uniform()      = (next_u64() >> 11) * 2^-53              in [0, 1)
///   below(k)       = next_u64() % k
///   normal()       = Box-Muller, u1 = 1 - uniform(), u2 = uniform(),
///                    sqrt(-2 ln u1) * cos(2 pi u2); one draw pair per call
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += kGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t k) { return next_u64() % k; }

  double normal();

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Seed for an independent stream derived from (base, stream): one SplitMix64
// output step applied to base + (stream + 1) * gamma.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Fisher-Yates: for i = n-1 down to 1, swap(p[i], p[below(i + 1)]).
std::vector<std::size_t> permutation(std::size_t n, SplitMix64& rng);

}  // namespace veinseg
