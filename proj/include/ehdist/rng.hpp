// Deterministic random-number plumbing shared by the simulation engine.
#pragma once

#include <cstdint>
#include <random>

namespace ehdist {

// SplitMix64 mixing function (Steele, Lea, Flood).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * @brief Counter-based substream seed derivation.
 *
 * Trial i always gets the same seed for a given master seed, independent
 * of how trials are scheduled across threads. This is what makes Monte
 * Carlo results bit-identical for any parallelism degree.
 */
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// Uniform double in [0,1) from the top 53 bits of the engine output.
// std::uniform_real_distribution is implementation-defined and would
// break cross-platform reproducibility.
inline double uniform01(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace ehdist
