#pragma once

// Seeding and sampling helpers. Every stochastic routine takes an explicit
// engine; substreams are derived deterministically from (master seed, ids).

#include <cstdint>
#include <random>

namespace urbanprop {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for substream `stream` (and optional `sub`) of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t sub = 0);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t sub = 0) {
  return Rng(derive_seed(master, stream, sub));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double a, double b) { return a + (b - a) * uniform01(rng); }

/// Exponential with the given rate (mean 1/rate).
double exponential(Rng& rng, double rate);

std::uint64_t poisson(Rng& rng, double mean);

}  // namespace urbanprop
