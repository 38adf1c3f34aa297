#include "phasetunnel/eikonal.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "phasetunnel/errors.hpp"
#include "phasetunnel/ode.hpp"

namespace phasetunnel {

MatR well_hessian(const Model& model) {
    model.potential.validate();
    const MatR& a = model.potential.aniso_matrix;
    Eigen::SelfAdjointEigenSolver<MatR> es(a);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw InputError("well_hessian: A must be positive definite");
    const VecR root = (0.5 * model.params.tau * es.eigenvalues().array()).sqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Layout of the shooting state: x, p, phi, B (column-major), dx/dangle, dp/dangle.
struct Layout {
    int n;
    int x() const { return 0; }
    int p() const { return n; }
    int phi() const { return 2 * n; }
    int b() const { return 2 * n + 1; }
    int dx() const { return 2 * n + 1 + n * n; }
    int dp() const { return 3 * n + 1 + n * n; }
    int size() const { return 4 * n + 1 + n * n; }
};

struct StopShot {};

OdeOptions shot_options(double rtol) {
    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = 1e-22;
    return opt;
}

}  // namespace

EikonalField::EikonalField(Model model, EikonalOptions opt)
    : model_(std::move(model)), opt_(opt), m_(phasetunnel::well_hessian(model_)) {
    model_.validate();
    if (!(opt_.launch_offset > 0.0) || !(opt_.trust_radius > 0.0))
        throw InputError("eikonal options must be positive");
}

std::size_t EikonalField::cache_size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

VecR EikonalField::launch_state(const Shot& shot) const {
    const int n = model_.params.n;
    const Layout l{n};
    const double eps = opt_.launch_offset;
    VecR u(n), du(n);
    if (n == 1) {
        u(0) = shot.angle < 0.5 * std::numbers::pi ? 1.0 : -1.0;
        du(0) = 0.0;
    } else {
        VecR v(2), dv(2);
        v << std::cos(shot.angle), std::sin(shot.angle);
        dv << -std::sin(shot.angle), std::cos(shot.angle);
        Eigen::SelfAdjointEigenSolver<MatR> es(m_);
        const MatR pull = es.eigenvectors() * (-2.0 * shot.t_ref * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                          es.eigenvectors().transpose();
        const VecR w = pull * v;
        const double wn = w.norm();
        u = w / wn;
        du = (MatR::Identity(n, n) - u * u.transpose()) * (pull * dv) / wn;
    }
    VecR y = VecR::Zero(l.size());
    const VecR x0 = eps * u;
    y.segment(l.x(), n) = x0;
    y.segment(l.p(), n) = m_ * x0;
    y(l.phi()) = 0.5 * x0.dot(m_ * x0);
    y.segment(l.b(), n * n) = Eigen::Map<const VecR>(m_.data(), n * n);
    y.segment(l.dx(), n) = eps * du;
    y.segment(l.dp(), n) = m_ * (eps * du);
    return y;
}

// Time at which the linearized flow x' = 2 M x, started on the sphere of
// radius launch_offset, reaches `target`: |exp(-2 M t) target| = launch_offset.
double EikonalField::linear_arrival_time(const VecR& target) const {
    const double eps = opt_.launch_offset;
    if (target.norm() <= eps) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatR> es(m_);
    const VecR c = es.eigenvectors().transpose() * target;
    auto size_at = [&](double t) { return (c.array() * (-2.0 * t * es.eigenvalues().array()).exp()).matrix().norm(); };
    double lo = 0.0, hi = std::log(target.norm() / eps) / (2.0 * es.eigenvalues().minCoeff());
    for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        (size_at(mid) > eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

EikonalField::ShotOutcome EikonalField::fire(const Shot& shot, Characteristic* samples) const {
    const int n = model_.params.n;
    const Layout l{n};
    const double tau = model_.params.tau;
    const auto& pot = model_.potential;
    auto rhs = [&](double, const VecR& y, VecR& dy) {
        const VecR x = y.segment(l.x(), n);
        const VecR p = y.segment(l.p(), n);
        const Eigen::Map<const MatR> b(y.data() + l.b(), n, n);
        const MatR hv = tau * v2_hessian(pot, x);
        dy.segment(l.x(), n) = 2.0 * p;
        dy.segment(l.p(), n) = tau * v2_grad(pot, x);
        dy(l.phi()) = 2.0 * p.squaredNorm();
        const MatR db = hv - 2.0 * b * b;
        dy.segment(l.b(), n * n) = Eigen::Map<const VecR>(db.data(), n * n);
        dy.segment(l.dx(), n) = 2.0 * y.segment(l.dp(), n);
        dy.segment(l.dp(), n) = hv * y.segment(l.dx(), n);
    };
    VecR y = launch_state(shot);
    auto record = [&](double t, const VecR& s) {
        if (!samples) return;
        samples->time.push_back(t);
        samples->x.push_back(s.segment(l.x(), n));
        samples->p.push_back(s.segment(l.p(), n));
        samples->phi.push_back(s(l.phi()));
    };
    integrate_dopri5(rhs, 0.0, shot.time, y, shot_options(opt_.ode_rtol), record);
    if (!y.allFinite()) throw NumericalError("eikonal shot produced a non-finite state");
    ShotOutcome out;
    out.x = y.segment(l.x(), n);
    out.p = y.segment(l.p(), n);
    out.phi = y(l.phi());
    out.b = Eigen::Map<const MatR>(y.data() + l.b(), n, n);
    out.b = 0.5 * (out.b + out.b.transpose()).eval();
    out.dx_dangle = y.segment(l.dx(), n);
    return out;
}

EikonalField::Shot EikonalField::initial_guess(const VecR& target) const {
    const int n = model_.params.n;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const Shot* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [key, shot] : cache_) {
            double d = 0.0;
            for (int i = 0; i < n; ++i) d += (key[i] - target(i)) * (key[i] - target(i));
            if (d < best_d) {
                best_d = d;
                best = &shot;
            }
        }
        if (best && std::sqrt(best_d) < 0.25 * target.norm()) return *best;
    }
    // Follow the trajectory aimed along the target until it reaches |target|.
    Shot guess;
    guess.angle = n == 1 ? (target(0) >= 0 ? 0.0 : std::numbers::pi) : std::atan2(target(1), target(0));
    guess.t_ref = linear_arrival_time(target);
    const Layout l{n};
    const double r = target.norm();
    const double tau = model_.params.tau;
    const auto& pot = model_.potential;
    auto rhs = [&](double, const VecR& y, VecR& dy) {
        const VecR x = y.head(n);
        dy.head(n) = 2.0 * y.segment(n, n);
        dy.segment(n, n) = tau * v2_grad(pot, x);
    };
    const VecR full = launch_state(guess);
    VecR y(2 * n);
    y << full.segment(l.x(), n), full.segment(l.p(), n);
    double t_hit = 0.0;
    try {
        integrate_dopri5(rhs, 0.0, 1e4, y, shot_options(1e-8), [&](double t, const VecR& s) {
            if (s.head(n).norm() >= r) {
                t_hit = t;
                throw StopShot{};
            }
        });
    } catch (const StopShot&) {
    }
    if (t_hit <= 0.0) throw NumericalError("eikonal: trajectory never reached the target radius");
    guess.time = t_hit;
    return guess;
}

EikonalField::Shot EikonalField::solve(const VecR& target, int& iterations,
                                       ShotOutcome& out) const {
    const int n = model_.params.n;
    Shot shot = initial_guess(target);
    out = fire(shot, nullptr);
    double res = (out.x - target).norm();
    const double tol = opt_.newton_tol * std::max(1.0, target.norm());
    iterations = 0;
    while (res > tol) {
        if (iterations >= opt_.max_newton)
            throw NumericalError("eikonal shooting did not converge", res);
        ++iterations;
        const VecR r = out.x - target;
        double d_angle = 0.0, d_time = 0.0;
        if (n == 1) {
            d_time = -r(0) / (2.0 * out.p(0));
        } else {
            MatR j(2, 2);
            j.col(0) = out.dx_dangle;
            j.col(1) = 2.0 * out.p;
            const VecR d = j.partialPivLu().solve(-r);
            d_angle = d(0);
            d_time = d(1);
        }
        d_angle = std::clamp(d_angle, -0.3, 0.3);
        d_time = std::clamp(d_time, -0.5 * shot.time, std::max(2.0, 0.5 * shot.time));
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 12; ++k) {
            Shot trial{shot.angle + lambda * d_angle, shot.time + lambda * d_time, shot.t_ref};
            ShotOutcome o = fire(trial, nullptr);
            const double tr = (o.x - target).norm();
            if (tr < res) {
                shot = trial;
                out = std::move(o);
                res = tr;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) {
            if (res <= 100.0 * tol) break;  // integrator noise floor
            throw NumericalError("eikonal shooting stalled", res);
        }
    }
    return shot;
}

Phi2Value EikonalField::phi2_at(const VecR& x) const {
    const int n = model_.params.n;
    if (x.size() != n) throw InputError("phi2_at: dimension mismatch");
    if (!x.allFinite()) throw InputError("phi2_at: non-finite point");
    if (x.norm() > opt_.trust_radius)
        throw InputError("phi2_at: point outside the trust region |x| <= " +
                         std::to_string(opt_.trust_radius));
    const double tau = model_.params.tau;
    Phi2Value v;
    if (x.norm() <= 2.0 * opt_.launch_offset) {
        v.value = 0.5 * x.dot(m_ * x);
        v.grad = m_ * x;
        v.hessian = m_;
    } else {
        ShotOutcome out;
        const Shot shot = solve(x, v.iterations, out);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (cache_.size() > 4096) cache_.clear();
            cache_[std::vector<double>(x.data(), x.data() + n)] = shot;
        }
        v.value = out.phi;
        v.grad = out.p;
        v.hessian = out.b;
    }
    v.eikonal_residual = std::abs(v.grad.squaredNorm() - tau * v2_eval(model_.potential, x));
    if (v.eikonal_residual > opt_.eikonal_tol)
        throw NumericalError("phi2_at: eikonal residual above tolerance", v.eikonal_residual);
    return v;
}

Characteristic EikonalField::characteristic_to(const VecR& x) const {
    const int n = model_.params.n;
    if (x.size() != n || x.norm() > opt_.trust_radius)
        throw InputError("characteristic_to: point outside the trust region");
    Characteristic c;
    if (x.norm() <= 2.0 * opt_.launch_offset) {
        c.time.push_back(0.0);
        c.x.push_back(x);
        c.p.push_back(m_ * x);
        c.phi.push_back(0.5 * x.dot(m_ * x));
        return c;
    }
    int it = 0;
    ShotOutcome out;
    const Shot shot = solve(x, it, out);
    fire(shot, &c);
    return c;
}

}  // namespace phasetunnel
