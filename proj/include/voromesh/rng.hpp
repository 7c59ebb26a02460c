#pragma once

#include <cstdint>
#include <random>

#include "voromesh/vec3.hpp"

namespace voromesh {

// All randomness in the library flows through mt19937_64 with the helpers
// below, so seeded runs are bit-identical across platforms (the standard
// pins the engine but not the <random> distributions).
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased-enough bounded draw (fixed-point multiply), deterministic.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(rng()) * static_cast<__uint128_t>(n)) >> 64);
}

inline Vec3 uniform_vec(Rng& rng, double lo, double hi) {
    double x = uniform_in(rng, lo, hi);
    double y = uniform_in(rng, lo, hi);
    double z = uniform_in(rng, lo, hi);
    return {x, y, z};
}

inline Vec3 uniform_unit_vec(Rng& rng) {
    // Rejection sample in the unit ball, then normalize.
    for (;;) {
        Vec3 v = uniform_vec(rng, -1.0, 1.0);
        double n2 = norm_sq(v);
        if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
    }
}

} // namespace voromesh
