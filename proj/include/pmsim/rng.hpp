#pragma once

// Reproducible split-stream random numbers. Every trajectory (and every
// measurement stream) owns an mt19937_64 whose seed is derived from the run
// seed and a stream index through splitmix64, so ensembles are independent of
// thread scheduling and bit-identical across reruns.

#include <cstdint>
#include <random>

namespace pmsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream tags keep dynamics noise and readout noise draws decoupled.
enum class RngStream : std::uint64_t {
    trajectory = 0x1ULL,
    measurement = 0x2ULL,
    kick = 0x3ULL,
};

inline std::mt19937_64 substream_engine(std::uint64_t seed, RngStream stream, std::uint64_t index) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
    s = splitmix64(s ^ index);
    return std::mt19937_64(s);
}

} // namespace pmsim
