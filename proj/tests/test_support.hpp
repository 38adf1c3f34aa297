#pragma once

#include <random>

#include "phasetunnel/model.hpp"

namespace pt_test {

using phasetunnel::cd;
using phasetunnel::VecC;
using phasetunnel::VecR;

inline VecR random_real(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    VecR v(n);
    for (int k = 0; k < n; ++k) v(k) = u(rng);
    return v;
}

inline VecC random_complex(std::mt19937_64& rng, int n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    VecC v(n);
    for (int k = 0; k < n; ++k) v(k) = cd(u(rng), u(rng));
    return v;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace pt_test
