#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tdbo {

// All stochastic code in the library draws through the helpers below instead
// of <random> distributions, whose output is implementation-defined. This
// keeps every seeded result bit-reproducible across compilers and across
// thread counts.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for substream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(0xd1b54a32d192ed03ULL + index));
}

// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, cosine branch only; consumes two draws per variate.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692528676655900577 * u2);
}

inline std::vector<double> standard_normal_vector(std::uint64_t seed,
                                                  std::size_t n) {
  Rng rng(seed);
  std::vector<double> z(n);
  for (auto& v : z) v = standard_normal(rng);
  return z;
}

}  // namespace tdbo
