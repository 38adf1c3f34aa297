#include "phasetunnel/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

namespace {

const cd I{0.0, 1.0};

cd bilinear(const VecC& a, const VecC& b) { return (a.transpose() * b)(0); }

// y(x) = (x' - 4 zeta_n zeta', x_n - 2 |zeta|^2) with zeta = grad phi2(x).
VecR base_map(const VecR& x, const VecR& zeta) {
    const int n = static_cast<int>(x.size());
    VecR y = x;
    for (int k = 0; k < n - 1; ++k) y(k) -= 4.0 * zeta(n - 1) * zeta(k);
    y(n - 1) -= 2.0 * zeta.squaredNorm();
    return y;
}

MatR base_jacobian(const VecR& zeta, const MatR& b) {
    const int n = static_cast<int>(zeta.size());
    MatR j = MatR::Identity(n, n);
    for (int k = 0; k < n - 1; ++k)
        j.row(k) -= 4.0 * (zeta(n - 1) * b.row(k) + zeta(k) * b.row(n - 1));
    j.row(n - 1) -= 4.0 * zeta.transpose() * b;
    return j;
}

VecR join(const VecR& head, double last) {
    VecR v(head.size() + 1);
    v << head, last;
    return v;
}

// Chebyshev interpolant on [c - w, c + w], evaluated at complex points.
class Chebyshev {
public:
    Chebyshev(double c, double w, const std::vector<double>& values) : c_(c), w_(w) {
        const int m = static_cast<int>(values.size());
        coef_.assign(m, 0.0);
        for (int k = 0; k < m; ++k) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j)
                acc += values[j] * std::cos(std::numbers::pi * k * (j + 0.5) / m);
            coef_[k] = 2.0 * acc / m;
        }
        coef_[0] *= 0.5;
        // Derivative series: c'_{k-1} = c'_{k+1} + 2 k c_k.
        deriv_.assign(m, 0.0);
        for (int k = m - 1; k >= 1; --k)
            deriv_[k - 1] = (k + 1 < m ? deriv_[k + 1] : 0.0) + 2.0 * k * coef_[k];
        deriv_[0] *= 0.5;
        for (double& d : deriv_) d /= w_;
    }

    static std::vector<double> nodes(double c, double w, int m) {
        std::vector<double> x(m);
        for (int j = 0; j < m; ++j) x[j] = c + w * std::cos(std::numbers::pi * (j + 0.5) / m);
        return x;
    }

    cd value(cd a) const { return clenshaw(coef_, (a - c_) / w_); }
    cd derivative(cd a) const { return clenshaw(deriv_, (a - c_) / w_); }

private:
    static cd clenshaw(const std::vector<double>& c, cd u) {
        cd b1 = 0.0, b2 = 0.0;
        for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
            const cd b0 = 2.0 * u * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        return u * b1 - b2 + c[0];
    }

    double c_, w_;
    std::vector<double> coef_, deriv_;
};

}  // namespace

PhasePoint kappa(const PhasePoint& z) {
    const int n = z.dim();
    PhasePoint w = z;
    for (int k = 0; k < n - 1; ++k) w.x(k) += 4.0 * z.xi(k) * z.xi(n - 1);
    w.x(n - 1) += 2.0 * bilinear(z.xi, z.xi);
    return w;
}

PhasePoint kappa_inv(const PhasePoint& w) {
    const int n = w.dim();
    PhasePoint z = w;
    for (int k = 0; k < n - 1; ++k) z.x(k) -= 4.0 * w.xi(k) * w.xi(n - 1);
    z.x(n - 1) -= 2.0 * bilinear(w.xi, w.xi);
    return z;
}

cd p_tilde_eval(Symbol which, const Model& model, const VecC& y, const VecC& eta) {
    return p_eval(which, model, kappa_inv({y, eta}));
}

TildeFlowState p1_tilde_flow(const PhasePoint& w0, cd t) {
    const int n = w0.dim();
    TildeFlowState out;
    out.point = w0;
    out.point.x -= 2.0 * t * w0.xi;
    out.point.x(n - 1) += t * t;
    out.point.xi(n - 1) -= t;
    out.action = -2.0 * (bilinear(w0.xi, w0.xi) * t - w0.xi(n - 1) * t * t + t * t * t / 3.0);
    return out;
}

TransformedPhases::TransformedPhases(const EikonalField& field) : field_(field) {}

TildePhase TransformedPhases::phi2_tilde_at(const VecR& y) const {
    const int n = model().params.n;
    if (y.size() != n) throw InputError("phi2_tilde_at: dimension mismatch");
    VecR x = y;
    const double tol = 1e-14 * std::max(1.0, y.norm());
    for (int it = 0;; ++it) {
        const Phi2Value v = field_.phi2_at(x);
        const VecR r = base_map(x, v.grad) - y;
        const MatR j = base_jacobian(v.grad, v.hessian);
        if (r.norm() <= tol || (it >= 8 && r.norm() <= 100.0 * tol)) {
            TildePhase out;
            const VecR& zeta = v.grad;
            const double zn = zeta(n - 1);
            const double zt2 = zeta.head(n - 1).squaredNorm();
            out.value = v.value - 4.0 * (zn * zn * zn / 3.0 + zt2 * zn);
            out.grad = zeta;
            const MatR h = v.hessian * j.inverse();
            out.hessian = 0.5 * (h + h.transpose());
            out.base_point = x;
            out.eikonal_residual =
                std::abs(p_tilde_eval(Symbol::P2, model(), y.cast<cd>(), I * zeta.cast<cd>()));
            return out;
        }
        if (it >= 40) throw NumericalError("phi2_tilde_at: base-map inversion diverged", r.norm());
        VecR dx = j.partialPivLu().solve(-r);
        const double len = dx.norm();
        if (len > 0.2) dx *= 0.2 / len;
        x += dx;
    }
}

GammaPoint TransformedPhases::gamma_uncached(const VecR& y_prime) const {
    const int n = model().params.n;
    const double mu = model().params.mu;
    double yn = mu;
    TildePhase ph;
    for (int it = 0;; ++it) {
        ph = phi2_tilde_at(join(y_prime, yn));
        const double f = yn + ph.grad.squaredNorm() - mu;
        if (std::abs(f) <= 1e-15 || (it >= 6 && std::abs(f) <= 1e-13)) break;
        if (it >= 40) throw NumericalError("crossing: no root of y_n + |grad phi2~|^2 = mu", std::abs(f));
        const double df = 1.0 + 2.0 * ph.grad.dot(ph.hessian.col(n - 1));
        yn -= f / df;
    }
    GammaPoint g;
    g.y = join(y_prime, yn);
    g.zeta = ph.grad;
    g.hessian = ph.hessian;
    g.phi2t = ph.value;
    g.f_slope = VecR::Zero(n - 1);
    g.dzeta = MatR::Zero(n, n - 1);
    const double dfn = 1.0 + 2.0 * g.zeta.dot(g.hessian.col(n - 1));
    for (int k = 0; k < n - 1; ++k) {
        g.f_slope(k) = -2.0 * g.zeta.dot(g.hessian.col(k)) / dfn;
        g.dzeta.col(k) = g.hessian.col(k) + g.f_slope(k) * g.hessian.col(n - 1);
    }
    return g;
}

GammaPoint TransformedPhases::crossing_and_gamma(const VecR& y_prime) const {
    if (y_prime.size() != model().params.n - 1)
        throw InputError("crossing_and_gamma: y' has wrong dimension");
    const std::vector<double> key(y_prime.data(), y_prime.data() + y_prime.size());
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = gamma_cache_.find(key);
        if (it != gamma_cache_.end()) return it->second;
    }
    GammaPoint g = gamma_uncached(y_prime);
    std::lock_guard<std::mutex> lock(mutex_);
    if (gamma_cache_.size() > 4096) gamma_cache_.clear();
    gamma_cache_[key] = g;
    return g;
}

CausticPoint TransformedPhases::caustic_point(const VecR& a) const {
    const int n = model().params.n;
    const GammaPoint g = crossing_and_gamma(a);
    const double zn = g.zeta(n - 1);
    double s = zn;
    if (n == 2) {
        // det d y / d(a, s) = 0, quadratic in s.
        const double z1 = g.zeta(0), dz1 = g.dzeta(0, 0), dz2 = g.dzeta(1, 0), fp = g.f_slope(0);
        const double qa = -4.0 * dz1;
        const double qb = -2.0 + 4.0 * dz1 * zn - 4.0 * z1 * dz2;
        const double qc = 2.0 * zn - 2.0 * z1 * fp;
        if (std::abs(qa) < 1e-14 * std::abs(qb)) {
            s = -qc / qb;
        } else {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc < 0.0) throw NumericalError("caustic: fold not found");
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (qb + std::copysign(sq, qb));
            const double r1 = q / qa, r2 = qc / q;
            s = std::abs(r1 - zn) < std::abs(r2 - zn) ? r1 : r2;
        }
    }
    CausticPoint c;
    c.s = s;
    c.y = g.y + 2.0 * s * g.zeta;
    c.y(n - 1) -= s * s;
    return c;
}

double TransformedPhases::g_at(const VecR& y_prime) const {
    const int n = model().params.n;
    if (n == 1) return caustic_point(VecR(0)).y(0);
    // Secant on the fold parametrization a -> Y'(a).
    double a0 = y_prime(0), a1 = y_prime(0) + 1e-3;
    double r0 = caustic_point(VecR::Constant(1, a0)).y(0) - y_prime(0);
    double r1 = caustic_point(VecR::Constant(1, a1)).y(0) - y_prime(0);
    for (int it = 0; it < 50 && std::abs(r1) > 1e-14; ++it) {
        if (r1 == r0) break;
        const double a2 = a1 - r1 * (a1 - a0) / (r1 - r0);
        a0 = a1;
        r0 = r1;
        a1 = a2;
        r1 = caustic_point(VecR::Constant(1, a1)).y(0) - y_prime(0);
    }
    if (std::abs(r1) > 1e-10) throw NumericalError("g_at: fold parametrization not inverted", std::abs(r1));
    return caustic_point(VecR::Constant(1, a1)).y(1);
}

Phi1Value TransformedPhases::phi1_tilde_at(const VecR& y) const {
    const int n = model().params.n;
    if (y.size() != n) throw InputError("phi1_tilde_at: dimension mismatch");
    VecR a = y.head(n - 1);
    GammaPoint g = crossing_and_gamma(a);
    double zn = g.zeta(n - 1);
    double disc = zn * zn - (y(n - 1) - g.y(n - 1));
    if (n == 1 && disc < 0.0) throw NumericalError("phi1_tilde_at: point lies past the caustic");
    double s = zn - std::sqrt(std::max(disc, 0.0));
    if (n == 2) {
        double res = std::numeric_limits<double>::infinity();
        for (int it = 0;; ++it) {
            g = crossing_and_gamma(a);
            VecR r = g.y + 2.0 * s * g.zeta - y;
            r(n - 1) -= s * s;
            res = r.norm();
            if (res <= 1e-14 || (it >= 10 && res <= 1e-12)) break;
            if (it >= 50) throw NumericalError("phi1_tilde_at: projection Newton diverged", res);
            MatR j(2, 2);
            j(0, 0) = 1.0 + 2.0 * s * g.dzeta(0, 0);
            j(1, 0) = g.f_slope(0) + 2.0 * s * g.dzeta(1, 0);
            j(0, 1) = 2.0 * g.zeta(0);
            j(1, 1) = 2.0 * g.zeta(1) - 2.0 * s;
            VecR d = j.partialPivLu().solve(-r);
            if (!d.allFinite()) throw NumericalError("phi1_tilde_at: singular projection", res);
            if (d.norm() > 0.05) d *= 0.05 / d.norm();
            a(0) += d(0);
            s += d(1);
        }
        if (s > caustic_point(a).s) throw NumericalError("phi1_tilde_at: point lies past the caustic");
    }
    const PhasePoint w0{g.y.cast<cd>(), I * g.zeta.cast<cd>()};
    const TildeFlowState fs = p1_tilde_flow(w0, I * s);
    Phi1Value out;
    out.value = g.phi2t + fs.action / I;
    out.grad = fs.point.xi / I;
    out.gamma_base = a;
    out.s = s;
    return out;
}

double TransformedPhases::psi(const VecR& y) const {
    return 0.5 * (phi2_tilde_at(y).value + phi1_tilde_at(y).value.real());
}

double TransformedPhases::z(const VecR& y) const {
    const Phi1Value p1 = phi1_tilde_at(y);
    const double gap = phi2_tilde_at(y).value - p1.value.real();
    const double mag = std::sqrt(2.0 * std::max(gap, 0.0));
    return p1.s < 0.0 ? -mag : mag;
}

CausticResult TransformedPhases::caustic_and_S() const {
    const int n = model().params.n;
    VecR a = VecR::Zero(n - 1);
    GammaPoint g = crossing_and_gamma(a);
    if (n == 2) {
        // Tangency with {y_n = mu}: the Gamma ray through it is vertical.
        for (int it = 0; std::abs(g.zeta(0)) > 1e-15; ++it) {
            if (it >= 50) throw NumericalError("caustic: tangency point not found", std::abs(g.zeta(0)));
            const double da = -g.zeta(0) / g.dzeta(0, 0);
            a(0) += std::clamp(da, -0.05, 0.05);
            g = crossing_and_gamma(a);
            if (it >= 8 && std::abs(g.zeta(0)) < 1e-13) break;
        }
    }
    const CausticPoint c = caustic_point(a);
    CausticResult r;
    r.y_prime_mu = c.y.head(n - 1);
    r.g_at_mu = c.y(n - 1);
    const PhasePoint w0{g.y.cast<cd>(), I * g.zeta.cast<cd>()};
    r.S_mu = (g.phi2t + p1_tilde_flow(w0, I * c.s).action / I).real();
    r.gamma_mu = g;
    return r;
}

OutgoingReport TransformedPhases::outgoing_phase_check(const std::vector<double>& y_n_samples) const {
    const int n = model().params.n;
    const double mu = model().params.mu;
    const CausticResult cr = caustic_and_S();
    const GammaPoint& g = cr.gamma_mu;
    const double zn = g.zeta(n - 1);
    const double top = g.y(n - 1) + g.zeta.squaredNorm();
    const PhasePoint w0{g.y.cast<cd>(), I * g.zeta.cast<cd>()};
    // Continued branch through the fold: t = i zeta_n + r, y_n = top + r^2.
    auto phase = [&](double yn, cd* grad_n) {
        const double r = std::sqrt(std::max(yn - top, 0.0));
        const TildeFlowState fs = p1_tilde_flow(w0, I * zn + r);
        if (grad_n) *grad_n = fs.point.xi(n - 1) / I;
        return g.phi2t + fs.action / I;
    };
    OutgoingReport rep;
    for (double yn : y_n_samples) {
        if (yn < mu) throw InputError("outgoing_phase_check: samples must satisfy y_n >= mu");
        cd gn;
        const cd ph = phase(yn, &gn);
        const double target = std::sqrt(yn - mu);
        double dev = std::abs(std::abs(gn.imag()) - target);
        if (yn - mu > 1e-3) {
            const double d = 1e-6;
            const double fd = (phase(yn + d, nullptr).imag() - phase(yn - d, nullptr).imag()) / (2.0 * d);
            dev = std::max(dev, std::abs(std::abs(fd) - target));
        }
        rep.y_n.push_back(yn);
        rep.deriv_deviation.push_back(dev);
        rep.re_deviation.push_back(std::abs(ph.real() - cr.S_mu));
        rep.max_deriv_deviation = std::max(rep.max_deriv_deviation, dev);
        rep.max_re_deviation = std::max(rep.max_re_deviation, rep.re_deviation.back());
    }
    if (n != 2) return rep;

    // Off gamma_mu the Lagrangian is reached from complex Gamma points; continue
    // the Gamma data analytically with a Chebyshev interpolant in y'.
    const double a0 = cr.y_prime_mu(0), w = 0.15;
    const int m = 24;
    std::vector<double> fv, z1, z2, pv;
    for (double a : Chebyshev::nodes(a0, w, m)) {
        const GammaPoint gp = crossing_and_gamma(VecR::Constant(1, a));
        fv.push_back(gp.y(1));
        z1.push_back(gp.zeta(0));
        z2.push_back(gp.zeta(1));
        pv.push_back(gp.phi2t);
    }
    const Chebyshev cf(a0, w, fv), c1(a0, w, z1), c2(a0, w, z2), cp(a0, w, pv);
    auto outgoing = [&](double yp, double yn) -> cd {
        cd a = a0, t = I * zn + std::sqrt(std::max(yn - top, 0.0));
        const int steps = 10;
        for (int k = 1; k <= steps; ++k) {
            const double ypk = a0 + (yp - a0) * k / steps;
            for (int it = 0; it < 30; ++it) {
                const cd e1 = a - 2.0 * I * c1.value(a) * t - ypk;
                const cd e2 = cf.value(a) - 2.0 * I * c2.value(a) * t + t * t - yn;
                if (std::abs(e1) + std::abs(e2) < 1e-14) break;
                const cd j11 = 1.0 - 2.0 * I * c1.derivative(a) * t, j12 = -2.0 * I * c1.value(a);
                const cd j21 = cf.derivative(a) - 2.0 * I * c2.derivative(a) * t;
                const cd j22 = -2.0 * I * c2.value(a) + 2.0 * t;
                const cd det = j11 * j22 - j12 * j21;
                a -= (j22 * e1 - j12 * e2) / det;
                t -= (-j21 * e1 + j11 * e2) / det;
            }
        }
        const cd zz1 = c1.value(a), zz2 = c2.value(a);
        const cd eta_sq = -(zz1 * zz1 + zz2 * zz2);
        const cd act = -2.0 * (eta_sq * t - I * zz2 * t * t + t * t * t / 3.0);
        return cp.value(a) + act / I;
    };
    rep.delta1 = std::numeric_limits<double>::infinity();
    for (double off : {-0.04, -0.02, 0.02, 0.04})
        for (double dy : {0.005, 0.02}) {
            const cd ph = outgoing(a0 + off, mu + dy);
            rep.delta1 = std::min(rep.delta1, (ph.real() - cr.S_mu) / (off * off));
            ++rep.delta1_samples;
        }
    return rep;
}

PhaseGapReport TransformedPhases::phase_gap_check(const std::vector<VecR>& y_samples,
                                                  const std::vector<double>& s_grid) const {
    PhaseGapReport rep;
    rep.minimum = std::numeric_limits<double>::infinity();
    for (const VecR& y : y_samples) {
        const Phi1Value p1 = phi1_tilde_at(y);
        for (double s : s_grid) {
            const double v =
                p_tilde_eval(Symbol::P2, model(), y.cast<cd>(), I * s * p1.grad).real();
            ++rep.evaluated;
            if (v < rep.minimum) {
                rep.minimum = v;
                rep.argmin_y = y;
                rep.argmin_s = s;
            }
        }
    }
    rep.positive = rep.evaluated > 0 && rep.minimum >= 1e-12;
    return rep;
}

}  // namespace phasetunnel
