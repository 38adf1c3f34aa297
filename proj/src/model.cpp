#include "phasetunnel/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

void ModelParams::validate() const {
    if (n != 1 && n != 2) throw InputError("n must be 1 or 2, got " + std::to_string(n));
    if (!(mu > 0.0)) throw InputError("mu must be positive");
    if (!(tau > 0.0)) throw InputError("tau must be positive");
    if (!(planck_h > 0.0)) throw InputError("h must be positive");
    if (!(strip_delta > 0.0)) throw InputError("strip_delta must be positive");
    if (!std::isfinite(coupling_c)) throw InputError("coupling c must be finite");
}

PotentialModel PotentialModel::radial(int n) {
    return {PotentialFamily::RadialGaussianWell, MatR::Identity(n, n)};
}

PotentialModel PotentialModel::anisotropic(const MatR& a) {
    PotentialModel m{PotentialFamily::AnisotropicGaussianWell, a};
    m.validate();
    return m;
}

void PotentialModel::validate() const {
    const MatR& a = aniso_matrix;
    if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > 2)
        throw InputError("A must be a square 1x1 or 2x2 matrix");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + a.cwiseAbs().maxCoeff()))
        throw InputError("A must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatR> es(a);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("A must be positive definite");
    if (family == PotentialFamily::RadialGaussianWell &&
        (a - MatR::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff() > 0.0)
        throw InputError("radial family requires A = I");
}

Model Model::radial(int n, double mu, double tau, double c, double h) {
    Model m;
    m.params.n = n;
    m.params.mu = mu;
    m.params.tau = tau;
    m.params.coupling_c = c;
    m.params.planck_h = h;
    m.potential = PotentialModel::radial(n);
    return m;
}

void Model::validate() const {
    params.validate();
    potential.validate();
    if (potential.dim() != params.n) throw InputError("A dimension does not match n");
}

double PhasePoint::distance(const PhasePoint& other) const {
    return std::sqrt((x - other.x).squaredNorm() + (xi - other.xi).squaredNorm());
}

// Eigen's dot() conjugates its first argument for complex vectors; the
// analytic continuation needs the bilinear form, hence transpose() * (...).
cd v2_eval(const PotentialModel& model, const VecC& x) {
    const VecC ax = model.aniso_matrix.cast<cd>() * x;
    const cd q = (x.transpose() * ax)(0);
    return 1.0 - std::exp(-0.5 * q);
}

VecC v2_grad(const PotentialModel& model, const VecC& x) {
    const VecC ax = model.aniso_matrix.cast<cd>() * x;
    const cd q = (x.transpose() * ax)(0);
    return std::exp(-0.5 * q) * ax;
}

MatC v2_hessian(const PotentialModel& model, const VecC& x) {
    const MatC a = model.aniso_matrix.cast<cd>();
    const VecC ax = a * x;
    const cd q = (x.transpose() * ax)(0);
    return std::exp(-0.5 * q) * (a - ax * ax.transpose());
}

double v2_eval(const PotentialModel& model, const VecR& x) {
    return -std::expm1(-0.5 * x.dot(model.aniso_matrix * x));
}

VecR v2_grad(const PotentialModel& model, const VecR& x) {
    const VecR ax = model.aniso_matrix * x;
    return std::exp(-0.5 * x.dot(ax)) * ax;
}

MatR v2_hessian(const PotentialModel& model, const VecR& x) {
    const VecR ax = model.aniso_matrix * x;
    return std::exp(-0.5 * x.dot(ax)) * (model.aniso_matrix - ax * ax.transpose());
}

cd p_eval(Symbol which, const Model& model, const PhasePoint& z) {
    const cd xi2 = (z.xi.transpose() * z.xi)(0);
    if (which == Symbol::P1) return xi2 + z.x(z.dim() - 1) - model.params.mu;
    return xi2 + model.params.tau * v2_eval(model.potential, z.x);
}

PhasePoint hamilton_field(Symbol which, const Model& model, const PhasePoint& z) {
    const int n = z.dim();
    PhasePoint v{2.0 * z.xi, VecC::Zero(n)};
    if (which == Symbol::P1) {
        v.xi(n - 1) = -1.0;
    } else {
        v.xi = -model.params.tau * v2_grad(model.potential, z.x);
    }
    return v;
}

double HarmonicData::level(int j) const {
    if (j < 1 || j > static_cast<int>(levels.size()))
        throw InputError("harmonic level index out of range");
    return levels[static_cast<std::size_t>(j - 1)];
}

HarmonicData harmonic_levels(const Model& model, int j_max) {
    model.potential.validate();
    if (j_max < 1) throw InputError("j_max must be >= 1");
    Eigen::SelfAdjointEigenSolver<MatR> es(model.potential.aniso_matrix);
    HarmonicData out;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        out.mode_frequencies.push_back(std::sqrt(model.params.tau * es.eigenvalues()(i) / 2.0));
    std::sort(out.mode_frequencies.begin(), out.mode_frequencies.end());

    // Every quantum number k_i <= j_max - 1 is enough: the j-th level never
    // needs a single mode excited more than j - 1 times.
    const int d = static_cast<int>(out.mode_frequencies.size());
    std::function<void(int, double)> rec = [&](int axis, double acc) {
        if (axis == d) {
            out.levels.push_back(acc);
            return;
        }
        for (int q = 0; q < j_max; ++q)
            rec(axis + 1, acc + (2.0 * q + 1.0) * out.mode_frequencies[static_cast<std::size_t>(axis)]);
    };
    rec(0, 0.0);
    std::sort(out.levels.begin(), out.levels.end());
    out.levels.resize(static_cast<std::size_t>(j_max));
    return out;
}

}  // namespace phasetunnel
