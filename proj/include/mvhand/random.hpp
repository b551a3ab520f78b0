#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeded draws built directly on the mt19937_64 bit stream. The standard
// pins the engine's output but not the distribution adaptors, so uniform
// and gaussian are derived here to keep scenes reproducible bit-for-bit.

namespace mvhand::rng {

using Engine = std::mt19937_64;

// Uniform in [0, 1).
inline double uniform_unit(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(g);
}

// Standard normal via Box-Muller; one draw per call, cosine branch only.
inline double gaussian(Engine& g) {
    const double u1 = static_cast<double>((g() >> 11) + 1) * 0x1.0p-53; // (0, 1]
    const double u2 = uniform_unit(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace mvhand::rng
