#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace phasetunnel {

using cd = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;

/// Scalar parameters of the 2x2 operator
///   P = diag(-h^2 Lap + x_n - mu, -h^2 Lap + tau V2(x)) + h [[0, c], [c, 0]].
struct ModelParams {
    int n = 2;
    double mu = 0.1;
    double tau = 0.1;
    double coupling_c = 1.0;
    double planck_h = 1e-3;
    double strip_delta = 0.5;

    void validate() const;
};

enum class PotentialFamily { RadialGaussianWell, AnisotropicGaussianWell };

/// V2(x) = 1 - exp(-<Ax, x>/2). Entire, Hess V2(0) = A.
struct PotentialModel {
    PotentialFamily family = PotentialFamily::RadialGaussianWell;
    MatR aniso_matrix = MatR::Identity(2, 2);

    static PotentialModel radial(int n);
    static PotentialModel anisotropic(const MatR& a);

    int dim() const { return static_cast<int>(aniso_matrix.rows()); }
    void validate() const;
};

struct Model {
    ModelParams params;
    PotentialModel potential;

    static Model radial(int n, double mu, double tau, double c = 1.0, double h = 1e-3);
    void validate() const;
};

/// A point of complexified phase space C^{2n}.
struct PhasePoint {
    VecC x;
    VecC xi;

    static PhasePoint zero(int n) { return {VecC::Zero(n), VecC::Zero(n)}; }
    int dim() const { return static_cast<int>(x.size()); }
    double distance(const PhasePoint& other) const;
};

enum class Symbol { P1, P2 };

cd v2_eval(const PotentialModel& model, const VecC& x);
VecC v2_grad(const PotentialModel& model, const VecC& x);
MatC v2_hessian(const PotentialModel& model, const VecC& x);

double v2_eval(const PotentialModel& model, const VecR& x);
VecR v2_grad(const PotentialModel& model, const VecR& x);
MatR v2_hessian(const PotentialModel& model, const VecR& x);

/// Principal symbols with the complex bilinear square xi.xi (not |xi|^2).
cd p_eval(Symbol which, const Model& model, const PhasePoint& z);

/// (d_xi p, -d_x p): the Hamilton field as a phase-space tangent vector.
PhasePoint hamilton_field(Symbol which, const Model& model, const PhasePoint& z);

struct HarmonicData {
    std::vector<double> mode_frequencies;
    std::vector<double> levels;

    /// 1-based, as in e_1 < e_2 <= ...
    double level(int j) const;
};

/// Levels of -Lap + tau <Ax, x>/2: sums of (2k_i + 1) sqrt(tau a_i / 2).
HarmonicData harmonic_levels(const Model& model, int j_max);

}  // namespace phasetunnel
