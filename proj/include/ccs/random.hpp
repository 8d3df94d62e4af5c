#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ccs {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of a run seeded with `seed`. Streams for
/// different indices (and different tags) do not overlap in practice.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0)
{
    return mix_seed(mix_seed(seed ^ mix_seed(tag)) + index);
}

inline double standard_normal(Rng& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double uniform01(Rng& rng)
{
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

/// Logistic(location, scale) by inverse CDF.
inline double logistic(Rng& rng, double location, double scale)
{
    double u = uniform01(rng);
    while (u <= 0.0) {
        u = uniform01(rng);
    }
    return location + scale * std::log(u / (1.0 - u));
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng);
}

} // namespace ccs
