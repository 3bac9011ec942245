#pragma once

#include <cstdint>
#include <random>

namespace radcine {

// Mixes (seed, stream) into an independent 64-bit state. Used to derive
// per-sample / per-purpose seeds without overlapping streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937 make_rng(uint64_t seed, uint64_t stream = 0) {
    return std::mt19937(static_cast<std::mt19937::result_type>(mix_seed(seed, stream)));
}

}  // namespace radcine
