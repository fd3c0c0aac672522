// random.hpp
//
// Seed derivation and the few samplers the agent and simulator need.
#pragma once

#include <cstdint>
#include <random>

namespace bayeswin {

using Rng = std::mt19937_64;

// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed as a stable function of the parent and up to two labels, so
// that every stream depends only on its coordinates and not on call order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    return mix64(mix64(mix64(parent) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

// Labels for the per-run streams.
enum class Stream : std::uint64_t {
    rates = 1,
    permutation = 2,
    environment = 3,
    allocation = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream s, std::uint64_t b = 0) noexcept {
    return derive_seed(parent, static_cast<std::uint64_t>(s), b);
}

inline double sample_beta(Rng& rng, double alpha, double beta) {
    const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
    const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
    return x / (x + y);
}

}  // namespace bayeswin
