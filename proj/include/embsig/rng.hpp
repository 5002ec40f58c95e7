#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace embsig {

// All randomness in the project flows through these helpers on top of
// std::mt19937_64, whose output sequence is fixed by the standard.  The
// distribution shaping is hand-rolled (rejection sampling, Box-Muller)
// because the std::*_distribution classes are implementation-defined and
// would break byte-identical artifacts across standard libraries.
using Rng = std::mt19937_64;

// Unbiased draw from {0, 1, ..., n-1}.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    // Reject the low "spill" region so every residue is equally likely.
    const std::uint64_t threshold = (0 - n) % n; // == 2^64 mod n
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % n;
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller.  Consumes exactly two draws per call so
// the stream position stays predictable.
inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - uniform_real01(rng); // in (0, 1], keeps log finite
    const double u2 = uniform_real01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fisher-Yates shuffle using uniform_index, deterministic for a fixed seed.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace embsig
