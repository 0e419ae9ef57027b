#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace crowdbp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed split: derive_seed(master, {a, b, ...}) folds each
/// counter into the master seed through mix64. Distinct counter tuples give
/// independent streams; the same tuple always gives the same seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) noexcept
{
    std::uint64_t s = mix64(master);
    for (auto c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
    return s;
}

inline double sample_gamma(Rng& rng, double shape)
{
    return std::gamma_distribution<double> {shape, 1.0}(rng);
}

/// Beta(a, b) via two gamma draws; redraws the (vanishingly rare) 0/0 case.
inline double sample_beta(Rng& rng, double a, double b)
{
    for (;;) {
        const double x = sample_gamma(rng, a);
        const double y = sample_gamma(rng, b);
        if (x + y > 0.0) return x / (x + y);
    }
}

inline double sample_uniform(Rng& rng)
{
    return std::uniform_real_distribution<double> {0.0, 1.0}(rng);
}

} // namespace crowdbp
