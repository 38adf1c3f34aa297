#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "phasetunnel/eikonal.hpp"

namespace phasetunnel {

/// kappa(x, xi) = (x' + 4 xi' xi_n, x_n + 2 xi.xi; xi).
PhasePoint kappa(const PhasePoint& z);
PhasePoint kappa_inv(const PhasePoint& w);

/// p~_j(y, eta) = p_j(kappa^{-1}(y, eta)).
cd p_tilde_eval(Symbol which, const Model& model, const VecC& y, const VecC& eta);

/// Closed-form flow of H_{p~1} = (-2 eta, -e_n): eta(t) = eta0 - t e_n,
/// y(t) = y0 - 2 eta0 t + t^2 e_n, with phase increment int eta.dy.
struct TildeFlowState {
    PhasePoint point;
    cd action{0.0, 0.0};
};
TildeFlowState p1_tilde_flow(const PhasePoint& w0, cd t);

struct TildePhase {
    double value = 0.0;
    VecR grad;
    MatR hessian;
    VecR base_point;  // x with y(x) = y
    double eikonal_residual = 0.0;
};

/// A point of Gamma = kappa(Sigma+) cut by {p~1 = 0}, parametrized by y'.
struct GammaPoint {
    VecR y;         // (y', f(y'))
    VecR zeta;      // grad phi2~ at y
    MatR hessian;   // Hess phi2~ at y
    double phi2t = 0.0;
    VecR f_slope;       // d f / d y'
    MatR dzeta;         // d zeta / d y', n x (n-1)
};

struct Phi1Value {
    cd value{0.0, 0.0};
    VecC grad;
    VecR gamma_base;  // y' of the Gamma point the ray starts from
    double s = 0.0;   // real ray parameter, t = i s
};

struct CausticPoint {
    VecR y;       // point on {y_n = g(y')}
    double s = 0.0;
};

struct CausticResult {
    VecR y_prime_mu;
    double g_at_mu = 0.0;
    double S_mu = 0.0;
    GammaPoint gamma_mu;  // Gamma point whose ray reaches (y'_mu, mu)
};

struct OutgoingReport {
    std::vector<double> y_n;
    std::vector<double> deriv_deviation;  // | |d Im phi~ / d y_n| - sqrt(y_n - mu) |
    std::vector<double> re_deviation;     // |Re phi~ - S_mu|
    double max_deriv_deviation = 0.0;
    double max_re_deviation = 0.0;
    double delta1 = 0.0;  // min (Re phi~ - S_mu) / dist^2 off gamma_mu; n = 2 only
    int delta1_samples = 0;
};

struct PhaseGapReport {
    double minimum = 0.0;
    VecR argmin_y;
    double argmin_s = 0.0;
    int evaluated = 0;
    bool positive = false;
};

/// Phase functions of the transformed picture near the well:
/// phi2~ (graph of kappa(Sigma+)), Gamma, phi1~ on Sigma1, psi, z,
/// the caustic and S(mu).
///
/// Gamma data are cached per y'; the cache is mutex-guarded so evaluation
/// is safe from several threads.
class TransformedPhases {
public:
    explicit TransformedPhases(const EikonalField& field);

    const Model& model() const { return field_.model(); }
    const EikonalField& field() const { return field_; }

    TildePhase phi2_tilde_at(const VecR& y) const;
    GammaPoint crossing_and_gamma(const VecR& y_prime) const;
    Phi1Value phi1_tilde_at(const VecR& y) const;
    double psi(const VecR& y) const;
    double z(const VecR& y) const;

    /// Fold of the Sigma1 projection above the Gamma point at y'.
    CausticPoint caustic_point(const VecR& gamma_y_prime) const;
    /// g(y') for the caustic, by inverting the fold parametrization.
    double g_at(const VecR& y_prime) const;
    CausticResult caustic_and_S() const;

    OutgoingReport outgoing_phase_check(const std::vector<double>& y_n_samples) const;
    PhaseGapReport phase_gap_check(const std::vector<VecR>& y_samples,
                                   const std::vector<double>& s_grid) const;

private:
    GammaPoint gamma_uncached(const VecR& y_prime) const;

    const EikonalField& field_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<double>, GammaPoint> gamma_cache_;
};

}  // namespace phasetunnel
