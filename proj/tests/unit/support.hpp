#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dsmks/grid.hpp"

namespace testing_support {

inline dsmks::Grid square(int n, double L = 1.0) {
    const double len[2] = {L, L};
    return dsmks::make_grid(2, n, len);
}

inline dsmks::Grid interval(int n, double L = 1.0) {
    const double len[1] = {L};
    return dsmks::make_grid(1, n, len);
}

inline dsmks::Field random_field(const dsmks::Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    dsmks::Field f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = d(rng);
    return f;
}

inline double max_abs_diff(const dsmks::Field& a, const dsmks::Field& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace testing_support
