#pragma once

#include <cstdint>
#include <random>

namespace mixlab {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for one Monte Carlo replicate. The stream depends only
/// on (seed, replicate), never on which thread runs it.
inline std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t replicate) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(replicate)));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& engine) noexcept {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace mixlab
