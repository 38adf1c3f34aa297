#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "phasetunnel/model.hpp"

namespace phasetunnel {

/// LU factorization with partial pivoting of a complex band matrix, in the
/// LAPACK gbtrf storage: the upper band widens from ku to kl + ku to hold
/// fill from row interchanges.
class BandedLU {
public:
    BandedLU() = default;

    /// Factors m; entries outside the (kl, ku) band are rejected.
    void factor(const Eigen::SparseMatrix<cd>& m, int kl, int ku);
    void solve(VecC& b) const;

    int size() const { return n_; }
    bool singular() const { return singular_; }

    /// Smallest bandwidths (kl, ku) containing every stored entry.
    static std::pair<int, int> bandwidths(const Eigen::SparseMatrix<cd>& m);

private:
    cd& at(int r, int c) { return ab_[static_cast<std::size_t>(kv_ + r - c) + static_cast<std::size_t>(c) * ld_]; }
    const cd& at(int r, int c) const {
        return ab_[static_cast<std::size_t>(kv_ + r - c) + static_cast<std::size_t>(c) * ld_];
    }

    int n_ = 0, kl_ = 0, ku_ = 0, kv_ = 0, ld_ = 0;
    bool singular_ = false;
    std::vector<cd> ab_;
    std::vector<int> ipiv_;
};

}  // namespace phasetunnel
