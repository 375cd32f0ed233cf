#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hnce {

// The engine is fully specified by the standard; the distributions below are
// written out so that draws are identical across standard libraries.
using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform on (0, 1); safe to pass to log().
double uniform_open01(Rng& rng);

// Uniform integer in [0, n). Requires n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

double standard_normal(Rng& rng);

// Standard Gumbel(0, 1) draw.
double standard_gumbel(Rng& rng);

// Index drawn with probability proportional to weights (nonnegative, positive sum).
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

// Mixes a base seed with stream coordinates (splitmix64 finalizer) so that
// independent streams can be derived from (seed, epoch, index) and the like.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace hnce
