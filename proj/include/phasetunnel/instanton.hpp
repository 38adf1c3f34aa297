#pragma once

#include <array>
#include <optional>

#include "phasetunnel/eikonal.hpp"
#include "phasetunnel/flow.hpp"

namespace phasetunnel {

/// The pair rho+ in Gamma+ and rho- in Gamma- joined by the H_{p1} flow,
/// rho- = exp(t_corr H_{p1})(rho+).
struct CorrespondencePair {
    PhasePoint rho_plus;
    PhasePoint rho_minus;
    cd t_corr{0.0, 0.0};
    VecR x_plus;
    VecR x_minus;
    double eta = 0.0;       // |grad phi2(x+)|
    double phi2_plus = 0.0;
    double phi2_minus = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

struct CorrespondenceOptions {
    double tol = 1e-10;
    int max_newton = 50;
    std::optional<VecR> tangential_guess;  // x'_+, n - 1 components
    std::optional<double> s_guess;
};

/// Solves for (x'_+, s) with t_corr = i s. x_{n,+} is slaved to the Gamma+
/// membership equation x_n = mu + tau V2(x', x_n); the residual is
/// grad phi2(x-) + grad phi2(x+) - s e_n with x- = x+ - 2 s grad phi2(x+) + s^2 e_n.
CorrespondencePair find_correspondence_pair(const EikonalField& field,
                                            const CorrespondenceOptions& opt = {});

/// Root of x_n = mu + tau V2(x', x_n) on [mu, mu + tau].
double gamma_plus_height(const Model& model, const VecR& x_tangential);

struct BrokenPath {
    PathSegment gamma2_plus;   // launch point near the well -> rho+
    PathSegment gamma1;        // rho+ -> rho-
    PathSegment gamma2_minus;  // rho- -> launch point near the well
    double completion_plus = 0.0;   // phi2 at the launch points: the skipped
    double completion_minus = 0.0;  // well neighbourhood in the quadratic model
};

BrokenPath build_broken_path(const EikonalField& field, const CorrespondencePair& pair,
                             int gamma1_samples = 64);

/// action_I is the action of the full loop. Its imaginary part is twice the
/// tunnelling exponent: Im rho ~ exp(-2 S / h) with S = Im(action_I) / 2,
/// which is also the value of phi1~ at the tangency point in the transformed
/// picture.
struct ActionResult {
    cd action_I{0.0, 0.0};
    double loop_imag = 0.0;
    double S = 0.0;
    std::array<cd, 3> per_segment{};
};

ActionResult action(const BrokenPath& path);

/// Everything computed by the independent 1D route for A = I.
struct RadialOracle {
    double x_star = 0.0;
    double eta = 0.0;
    double phi2 = 0.0;  // sqrt(tau) int_0^x* sqrt(V2)
    double loop_imag = 0.0;
    double S = 0.0;
};

RadialOracle action_radial_oracle(const Model& model);

/// Convenience: pair, path and action in one call.
ActionResult geometric_action(const EikonalField& field);

}  // namespace phasetunnel
