#include "phasetunnel/banded_lu.hpp"

#include <algorithm>
#include <cmath>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

std::pair<int, int> BandedLU::bandwidths(const Eigen::SparseMatrix<cd>& m) {
    int kl = 0, ku = 0;
    for (int c = 0; c < m.outerSize(); ++c)
        for (Eigen::SparseMatrix<cd>::InnerIterator it(m, c); it; ++it) {
            const int r = static_cast<int>(it.row());
            kl = std::max(kl, r - c);
            ku = std::max(ku, c - r);
        }
    return {kl, ku};
}

void BandedLU::factor(const Eigen::SparseMatrix<cd>& m, int kl, int ku) {
    if (m.rows() != m.cols()) throw InputError("BandedLU: matrix must be square");
    n_ = static_cast<int>(m.rows());
    kl_ = kl;
    ku_ = ku;
    kv_ = kl + ku;
    ld_ = 2 * kl + ku + 1;
    singular_ = false;
    ab_.assign(static_cast<std::size_t>(ld_) * n_, cd(0.0, 0.0));
    ipiv_.assign(n_, 0);
    for (int c = 0; c < m.outerSize(); ++c)
        for (Eigen::SparseMatrix<cd>::InnerIterator it(m, c); it; ++it) {
            const int r = static_cast<int>(it.row());
            if (r - c > kl || c - r > ku) throw InputError("BandedLU: entry outside the band");
            at(r, c) += it.value();
        }

    int ju = 0;
    for (int j = 0; j < n_; ++j) {
        const int km = std::min(kl_, n_ - 1 - j);
        int p = 0;
        double best = std::abs(at(j, j));
        for (int i = 1; i <= km; ++i) {
            const double v = std::abs(at(j + i, j));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        ipiv_[j] = j + p;
        if (best == 0.0) {
            singular_ = true;
            return;
        }
        ju = std::max(ju, std::min(j + ku_ + p, n_ - 1));
        if (p != 0)
            for (int c = j; c <= ju; ++c) std::swap(at(j, c), at(j + p, c));
        const cd inv = 1.0 / at(j, j);
        for (int i = 1; i <= km; ++i) at(j + i, j) *= inv;
        for (int c = j + 1; c <= ju; ++c) {
            const cd u = at(j, c);
            if (u == cd(0.0, 0.0)) continue;
            for (int i = 1; i <= km; ++i) at(j + i, c) -= at(j + i, j) * u;
        }
    }
}

void BandedLU::solve(VecC& b) const {
    if (singular_) throw NumericalError("BandedLU: matrix is singular");
    if (b.size() != n_) throw InputError("BandedLU: right-hand side has wrong size");
    for (int j = 0; j < n_; ++j) {
        if (ipiv_[j] != j) std::swap(b(j), b(ipiv_[j]));
        const int km = std::min(kl_, n_ - 1 - j);
        const cd bj = b(j);
        for (int i = 1; i <= km; ++i) b(j + i) -= at(j + i, j) * bj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
        b(j) /= at(j, j);
        const cd bj = b(j);
        for (int i = std::max(0, j - kv_); i < j; ++i) b(i) -= at(i, j) * bj;
    }
}

}  // namespace phasetunnel
