#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace freqx {

// All experiment randomness flows from one root seed through named
// sub-streams, so individual stages stay reproducible in isolation.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    // FNV-1a over the stream name, then splitmix64 finalization.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view stream) {
    return std::mt19937_64(derive_seed(root, stream));
}

}  // namespace freqx
