#pragma once
// Deterministic seed derivation for independent random streams.

#include <cstdint>
#include <random>

namespace lfc {

// SplitMix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Seed of sub-stream `stream` (and optional `index`) of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(mix_seed(master) ^ (stream * 0xD1B54A32D192ED03ull)) ^ index);
}

using Rng = std::mt19937_64;

}  // namespace lfc
