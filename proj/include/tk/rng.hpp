#pragma once

#include <cstdint>
#include <random>

namespace tk {

// Uniform draw in [lo, hi) built from the top 53 bits of the generator
// output. std::uniform_real_distribution is implementation-defined; this
// keeps seeded runs reproducible across standard libraries.
inline double uniform_draw(std::mt19937_64& rng, double lo, double hi) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

} // namespace tk
