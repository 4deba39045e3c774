/// Shared test helpers: seeded RNG fields and closed-form sample fields.
#pragma once

#include <cmath>
#include <random>

#include "chemofv/grid.hpp"

namespace chemofv::test {

inline Field random_field(const Grid& g, double lo, double hi, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Field f(g);
    for (double& v : f.values) v = dist(rng);
    return f;
}

inline Field reflect_x(const Field& f) {
    Field out(f.grid);
    const int nx = f.grid.nx(), ny = f.grid.ny();
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) out(ix, iy) = f(nx - 1 - ix, iy);
    return out;
}

} // namespace chemofv::test
