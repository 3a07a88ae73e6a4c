#pragma once

#include "coilopt/random.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <vector>

namespace coilopt::optim {

/// Latin-hypercube sample in the unit cube: rows are points. Coordinate j of
/// the n points occupies each of the n strata [k/n, (k+1)/n) exactly once.
inline Eigen::MatrixXd latin_hypercube(int n, int dim, Rng& rng) {
    Eigen::MatrixXd out(n, dim);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 0; j < dim; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        // Fisher-Yates with our own uniform draw keeps the sequence libstdc++-independent
        for (int i = n - 1; i > 0; --i) {
            const int k = static_cast<int>(uniform01(rng) * (i + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(k, i))]);
        }
        for (int i = 0; i < n; ++i) out(i, j) = (perm[static_cast<std::size_t>(i)] + uniform01(rng)) / n;
    }
    return out;
}

}  // namespace coilopt::optim
