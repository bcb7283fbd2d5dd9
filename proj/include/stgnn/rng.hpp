#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace stgnn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Named sub-stream of a master seed. Every consumer of randomness
/// (features, negatives, evaluation pairs, synthetic data) draws from its
/// own stream so that changing one consumer never shifts another.
inline Rng make_stream(std::uint64_t master_seed, std::string_view name) {
    return Rng(mix64(master_seed ^ mix64(hash_name(name))));
}

inline std::uint64_t hash_time(double t) noexcept {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &t, sizeof bits);
    return bits;
}

} // namespace stgnn
