#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

#include "engage/error.hpp"

namespace engage::rng {

// std::mt19937_64 output is fully specified by the standard, but the
// <random> distributions are not. All sampling below maps raw engine output
// to values itself so that a seed means the same corpus on every platform.

using Engine = std::mt19937_64;

/// splitmix64; used to derive independent per-stream seeds from one master seed.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

/// Standard normal via Box-Muller. Consumes exactly two engine draws.
inline double normal(Engine& g) {
    const double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double normal(Engine& g, double mean, double stddev) {
    return mean + stddev * normal(g);
}

/// Index draw proportional to non-negative weights (at least one positive).
inline std::size_t categorical(Engine& g, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw InputError("categorical weight must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InputError("categorical weights must have a positive sum");
    const double u = uniform01(g) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

/// Uniform index in [0, n) by rejection, bias-free.
inline std::size_t uniform_index(Engine& g, std::size_t n) {
    if (n == 0) throw InputError("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

/// Deterministic Fisher-Yates shuffle (std::shuffle is implementation-defined).
template <typename T>
void shuffle(Engine& g, std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = uniform_index(g, i);
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace engage::rng
