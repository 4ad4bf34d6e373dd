#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace evoae {

/// Engine-wide generator. Distributions used with it must be stateless so that
/// saving the engine state alone is enough to resume a run bit-exactly.
using Rng = std::mt19937_64;

/// Uniform real in [0, 1).
inline double uniform01(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

/// Uniform integer in [lo, hi].
inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

std::string rng_state(const Rng& rng);
void restore_rng_state(Rng& rng, const std::string& state);

} // namespace evoae
