#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "phasetunnel/model.hpp"

namespace phasetunnel {

struct EikonalOptions {
    double launch_offset = 1e-6;  // distance from the well where trajectories start
    double trust_radius = 1.5;
    double ode_rtol = 1e-12;
    double newton_tol = 1e-12;  // on |x(T) - target|
    int max_newton = 60;
    double eikonal_tol = 1e-8;
};

/// phi2(x), its gradient and Hessian. The Hessian comes from the Riccati
/// equation carried along the characteristic.
struct Phi2Value {
    double value = 0.0;
    VecR grad;
    MatR hessian;
    double eikonal_residual = 0.0;
    int iterations = 0;
};

/// Samples of the unstable-manifold characteristic from the launch point to a
/// target, in the real time of the flow dx/dt = 2p, dp/dt = tau grad V2.
struct Characteristic {
    std::vector<double> time;
    std::vector<VecR> x;
    std::vector<VecR> p;
    std::vector<double> phi;
};

/// Unique symmetric positive-definite M with M^2 = tau A / 2.
MatR well_hessian(const Model& model);

/// The outgoing phase phi2 = d2(., 0), i.e. the Agmon distance to the well
/// for the metric tau V2 dx^2, evaluated on the real trace near the well.
///
/// phi2 is computed by shooting along the unstable manifold of the
/// hyperbolic point (0, 0) of the flow of xi^2 - tau V2: trajectories are
/// launched at distance `launch_offset` along the linearized manifold p = M x
/// (the skipped piece contributes <M x0, x0>/2 exactly up to O(|x0|^4)) and
/// Newton-corrected on (launch angle, travel time).
///
/// Converged shots are cached; the cache is guarded by a mutex so one field
/// may be shared between threads.
class EikonalField {
public:
    explicit EikonalField(Model model, EikonalOptions opt = {});

    const Model& model() const { return model_; }
    const EikonalOptions& options() const { return opt_; }
    const MatR& well_hessian() const { return m_; }

    Phi2Value phi2_at(const VecR& x) const;
    /// Every accepted integrator step of the converged shot to x.
    Characteristic characteristic_to(const VecR& x) const;

    std::size_t cache_size() const;

private:
    // The launch direction is exp(-2 M t_ref) (cos angle, sin angle), normalized:
    // with t_ref near the arrival time the linearized flow maps `angle` to the
    // arrival direction almost isometrically, however anisotropic M is.
    struct Shot {
        double angle = 0.0;
        double time = 0.0;
        double t_ref = 0.0;
    };
    struct ShotOutcome {
        VecR x, p, dx_dangle;
        double phi = 0.0;
        MatR b;
    };

    VecR launch_state(const Shot& shot) const;
    double linear_arrival_time(const VecR& target) const;
    ShotOutcome fire(const Shot& shot, Characteristic* samples) const;
    Shot initial_guess(const VecR& target) const;
    Shot solve(const VecR& target, int& iterations, ShotOutcome& out) const;

    Model model_;
    EikonalOptions opt_;
    MatR m_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<double>, Shot> cache_;
};

}  // namespace phasetunnel
