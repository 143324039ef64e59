#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mergecast {

// Deterministic RNG helpers. std::uniform_int_distribution and friends are
// not bit-portable across standard libraries, so every randomized step in
// training and fold assignment goes through these instead. All results are
// a pure function of the mt19937_64 seed.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stable derivation of a sub-seed (per tree, per fold, ...) from a master seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

// Uniform draw in [0, n). Modulo bias is < 2^-53 for any n that fits in
// memory; irrelevant here and keeps the draw portable.
inline std::size_t rng_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Uniform double in [0, 1) with 53 random bits.
inline double rng_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void rng_shuffle(std::mt19937_64& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng_below(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace mergecast
