#include "veinseg/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

namespace veinseg {

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 rng(base + (stream + 1) * SplitMix64::kGamma);
  return rng.next_u64();
}

std::vector<std::size_t> permutation(std::size_t n, SplitMix64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i-- > 1;) {
    std::swap(p[i], p[rng.below(i + 1)]);
  }
  return p;
}

}  // namespace veinseg
