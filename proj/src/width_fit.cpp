#include "phasetunnel/width_fit.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

namespace {

// Column-scaled SVD least squares; returns the solution and the scaled condition number.
VecR solve_scaled(const MatR& a, const VecR& y, double& cond, MatR* cov_unscaled = nullptr) {
    VecR scale = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    const MatR as = a * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<MatR> svd(as, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecR sv = svd.singularValues();
    cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (cov_unscaled) {
        const MatR vs = svd.matrixV() * sv.cwiseInverse().asDiagonal();
        *cov_unscaled = scale.cwiseInverse().asDiagonal() * (vs * vs.transpose()) *
                        scale.cwiseInverse().asDiagonal();
    }
    return scale.cwiseInverse().asDiagonal() * svd.solve(y);
}

}  // namespace

WidthFit fit_width(const std::vector<WidthSample>& samples, int min_samples, double underflow_factor) {
    WidthFit fit;
    for (const WidthSample& s : samples) {
        if (!(s.h > 0.0)) throw InputError("fit_width: h must be positive");
        if (std::abs(s.rho.imag()) < underflow_factor * s.residual || s.rho.imag() == 0.0) {
            ++fit.excluded;
            continue;
        }
        fit.samples.push_back(s);
    }
    const int m = static_cast<int>(fit.samples.size());
    if (m < std::max(min_samples, 3))
        throw InputError("fit_width: " + std::to_string(m) + " usable samples, need " +
                         std::to_string(std::max(min_samples, 3)));

    MatR a(m, 3);
    VecR y(m);
    for (int i = 0; i < m; ++i) {
        const double h = fit.samples[i].h;
        a(i, 0) = -2.0 / h;
        a(i, 1) = std::log(h);
        a(i, 2) = 1.0;
        y(i) = std::log(std::abs(fit.samples[i].rho.imag()));
    }
    double cond = 0.0;
    MatR cov;
    const VecR x = solve_scaled(a, y, cond, &cov);
    if (!(cond < 1e10)) throw InputError("fit_width: rank-deficient design, widen the h range");
    fit.S_fit = x(0);
    fit.prefactor_exponent = x(1);
    fit.log_f00 = x(2);
    const VecR r = a * x - y;
    fit.residual_rms = std::sqrt(r.squaredNorm() / m);
    const double sigma2 = m > 3 ? r.squaredNorm() / (m - 3) : std::numeric_limits<double>::quiet_NaN();
    fit.S_stderr = std::sqrt(sigma2 * cov(0, 0));
    fit.q_stderr = std::sqrt(sigma2 * cov(1, 1));

    MatR ac(m, 2);
    VecR yc = y - 1.5 * a.col(1);
    ac.col(0) = a.col(0);
    ac.col(1) = a.col(2);
    double cond_c = 0.0;
    const VecR xc = solve_scaled(ac, yc, cond_c);
    if (!(cond_c < 1e10)) throw InputError("fit_width: rank-deficient design, widen the h range");
    fit.S_constrained = xc(0);
    fit.log_f00_constrained = xc(1);
    fit.residual_rms_constrained = std::sqrt((ac * xc - yc).squaredNorm() / m);
    return fit;
}

std::vector<WidthSample> accepted_samples(const std::vector<ScanSample>& scan) {
    std::vector<WidthSample> out;
    for (const ScanSample& s : scan)
        if (s.ok && s.accepted) out.push_back({s.h, s.result.rho, s.result.eigvec_residual});
    return out;
}

}  // namespace phasetunnel
