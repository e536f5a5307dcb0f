#include "urbanprop/rng.hpp"

#include <cmath>

namespace urbanprop {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t sub) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ (sub * 0x9e3779b97f4a7c15ULL));
}

double exponential(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

std::uint64_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean < 500.0) {
    // Multiplicative method; exact, O(mean) draws.
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform01(rng);
    while (prod > limit) {
      ++k;
      prod *= uniform01(rng);
    }
    return k;
  }
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

}  // namespace urbanprop
