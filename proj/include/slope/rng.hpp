#pragma once

#include <cstdint>
#include <random>

namespace slope {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent deterministic substream: the draw sequence depends only on
/// (master, stream), never on evaluation order. All Monte Carlo expectations
/// route through this so common-random-number comparisons are exact.
inline std::mt19937_64 substream(std::uint64_t master, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(splitmix64(master) + stream));
}

}  // namespace slope
