#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dalbench {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream seed from (master seed, cycle, purpose).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cycle,
                                    std::string_view purpose) noexcept {
    return mix64(mix64(mix64(master) ^ cycle) ^ hash_tag(purpose));
}

}  // namespace dalbench
