#pragma once

#include <cstdint>
#include <random>

namespace switching {

// splitmix64; used to derive independent engine seeds from (seed, index...)
// tuples so parallel paths and episodes are reproducible regardless of
// scheduling.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b), c);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(mix64(seed, stream));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t substream) {
    return std::mt19937_64(mix64(seed, stream, substream));
}

}  // namespace switching
