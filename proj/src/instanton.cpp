#include "phasetunnel/instanton.hpp"

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

namespace {

const cd I{0.0, 1.0};

double bracketed_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NumericalError("no sign change in bracket");
    boost::uintmax_t max_iter = 200;
    const auto r = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), max_iter);
    return 0.5 * (r.first + r.second);
}

VecR join(const VecR& tangential, double normal) {
    VecR x(tangential.size() + 1);
    x << tangential, normal;
    return x;
}

struct PairState {
    VecR x_plus, x_minus, zeta, grad_minus, residual;
    MatR b_plus, b_minus, d_plus;  // d_plus = d x+ / d x'
    double phi_plus = 0.0, phi_minus = 0.0;
};

PairState evaluate_pair(const EikonalField& field, const VecR& a, double s) {
    const Model& model = field.model();
    const int n = model.params.n;
    const double tau = model.params.tau;
    PairState st;
    st.x_plus = join(a, gamma_plus_height(model, a));
    const Phi2Value vp = field.phi2_at(st.x_plus);
    st.zeta = vp.grad;
    st.b_plus = vp.hessian;
    st.phi_plus = vp.value;
    VecR en = VecR::Zero(n);
    en(n - 1) = 1.0;
    st.x_minus = st.x_plus - 2.0 * s * st.zeta + s * s * en;
    const Phi2Value vm = field.phi2_at(st.x_minus);
    st.grad_minus = vm.grad;
    st.b_minus = vm.hessian;
    st.phi_minus = vm.value;
    st.residual = st.grad_minus + st.zeta - s * en;
    // Implicit derivative of the membership equation.
    st.d_plus = MatR::Zero(n, n - 1);
    if (n > 1) {
        const VecR g = tau * v2_grad(model.potential, st.x_plus);
        for (int k = 0; k < n - 1; ++k) {
            st.d_plus(k, k) = 1.0;
            st.d_plus(n - 1, k) = g(k) / (1.0 - g(n - 1));
        }
    }
    return st;
}

}  // namespace

double gamma_plus_height(const Model& model, const VecR& x_tangential) {
    const double mu = model.params.mu, tau = model.params.tau;
    if (x_tangential.size() != model.params.n - 1)
        throw InputError("gamma_plus_height: tangential dimension mismatch");
    auto f = [&](double xn) { return xn - mu - tau * v2_eval(model.potential, join(x_tangential, xn)); };
    return bracketed_root(f, mu, mu + tau);
}

CorrespondencePair find_correspondence_pair(const EikonalField& field,
                                            const CorrespondenceOptions& opt) {
    const Model& model = field.model();
    const int n = model.params.n;
    VecR a = opt.tangential_guess.value_or(VecR::Zero(n - 1));
    if (a.size() != n - 1) throw InputError("tangential guess has wrong dimension");
    double s = 0.0;
    if (opt.s_guess) {
        s = *opt.s_guess;
    } else {
        const VecR xp = join(a, gamma_plus_height(model, a));
        s = 2.0 * field.phi2_at(xp).grad(n - 1);
    }

    PairState st = evaluate_pair(field, a, s);
    double res = st.residual.norm();
    int it = 0;
    while (res > opt.tol) {
        if (it >= opt.max_newton)
            throw NumericalError("correspondence pair: Newton did not converge", res);
        ++it;
        VecR en = VecR::Zero(n);
        en(n - 1) = 1.0;
        MatR j(n, n);
        if (n > 1) {
            const MatR dxm_da = st.d_plus - 2.0 * s * st.b_plus * st.d_plus;
            j.leftCols(n - 1) = st.b_minus * dxm_da + st.b_plus * st.d_plus;
        }
        const VecR dxm_ds = -2.0 * st.zeta + 2.0 * s * en;
        j.col(n - 1) = st.b_minus * dxm_ds - en;
        const VecR step = j.fullPivLu().solve(-st.residual);
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 20 && !improved; ++k, lambda *= 0.5) {
            const VecR a_try = a + lambda * step.head(n - 1);
            const double s_try = s + lambda * step(n - 1);
            PairState trial;
            try {
                trial = evaluate_pair(field, a_try, s_try);
            } catch (const InputError&) {
                continue;
            } catch (const NumericalError&) {
                continue;
            }
            const double r = trial.residual.norm();
            if (r < res) {
                a = a_try;
                s = s_try;
                st = std::move(trial);
                res = r;
                improved = true;
            }
        }
        if (!improved) {
            if (res <= 1e3 * opt.tol) break;
            throw NumericalError("correspondence pair: line search failed", res);
        }
    }

    CorrespondencePair pair;
    pair.x_plus = st.x_plus;
    pair.x_minus = st.x_minus;
    pair.rho_plus = {st.x_plus.cast<cd>(), I * st.zeta.cast<cd>()};
    pair.rho_minus = {st.x_minus.cast<cd>(), -I * st.grad_minus.cast<cd>()};
    pair.t_corr = I * s;
    pair.eta = st.zeta.norm();
    pair.phi2_plus = st.phi_plus;
    pair.phi2_minus = st.phi_minus;
    pair.residual = res;
    pair.iterations = it;
    return pair;
}

namespace {

// Sigma+ (sign = +1) or Sigma- (sign = -1) sample from the real characteristic.
PathSegment sigma_segment(const Characteristic& c, int sign) {
    PathSegment seg;
    const std::size_t m = c.time.size();
    if (sign > 0) {
        seg.generator = Generator::GradientFlowSigmaPlus;
        for (std::size_t k = 0; k < m; ++k) {
            FlowState fs;
            fs.point = {c.x[k].cast<cd>(), I * c.p[k].cast<cd>()};
            fs.action = I * (c.phi[k] - c.phi.front());
            fs.time = -I * (c.time[k] - c.time.front());
            seg.samples.push_back(std::move(fs));
        }
    } else {
        seg.generator = Generator::GradientFlowSigmaMinus;
        for (std::size_t k = m; k-- > 0;) {
            FlowState fs;
            fs.point = {c.x[k].cast<cd>(), -I * c.p[k].cast<cd>()};
            fs.action = I * (c.phi.back() - c.phi[k]);
            fs.time = I * (c.time[k] - c.time.back());
            seg.samples.push_back(std::move(fs));
        }
    }
    return seg;
}

}  // namespace

BrokenPath build_broken_path(const EikonalField& field, const CorrespondencePair& pair,
                             int gamma1_samples) {
    if (gamma1_samples < 2) throw InputError("gamma1 needs at least two samples");
    BrokenPath path;
    const Characteristic cp = field.characteristic_to(pair.x_plus);
    const Characteristic cm = field.characteristic_to(pair.x_minus);
    path.gamma2_plus = sigma_segment(cp, +1);
    path.gamma2_minus = sigma_segment(cm, -1);
    path.completion_plus = cp.phi.front();
    path.completion_minus = cm.phi.front();

    path.gamma1.generator = Generator::Hp1;
    for (int k = 0; k < gamma1_samples; ++k) {
        const cd t = pair.t_corr * (static_cast<double>(k) / (gamma1_samples - 1));
        path.gamma1.samples.push_back(p1_flow_closed_form(pair.rho_plus, t));
    }

    const double tol = 1e-8;
    const auto gap = [](const PhasePoint& a, const PhasePoint& b) { return a.distance(b); };
    if (gap(path.gamma2_plus.back().point, pair.rho_plus) > tol ||
        gap(path.gamma1.back().point, pair.rho_minus) > tol ||
        gap(path.gamma2_minus.front().point, pair.rho_minus) > tol)
        throw NumericalError("broken path: segment endpoints do not chain");
    return path;
}

ActionResult action(const BrokenPath& path) {
    ActionResult r;
    r.per_segment[0] = path.gamma2_plus.back().action + I * path.completion_plus;
    r.per_segment[1] = path.gamma1.back().action;
    r.per_segment[2] = path.gamma2_minus.back().action + I * path.completion_minus;
    r.action_I = r.per_segment[0] + r.per_segment[1] + r.per_segment[2];
    r.loop_imag = r.action_I.imag();
    r.S = 0.5 * r.loop_imag;
    return r;
}

RadialOracle action_radial_oracle(const Model& model) {
    model.validate();
    if (model.potential.family != PotentialFamily::RadialGaussianWell)
        throw InputError("radial oracle requires the radial family");
    const double mu = model.params.mu, tau = model.params.tau;
    auto v2 = [](double r) { return -std::expm1(-0.5 * r * r); };
    RadialOracle o;
    o.x_star = bracketed_root([&](double x) { return x - mu - tau * v2(x); }, mu, mu + tau);
    if (o.x_star > 1.5) throw InputError("radial oracle: root outside the trust region");
    o.eta = std::sqrt(tau * v2(o.x_star));
    double err = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double r) { return std::sqrt(v2(r)); }, 0.0, o.x_star, 15, 1e-14, &err);
    o.phi2 = std::sqrt(tau) * integral;
    o.loop_imag = 2.0 * o.phi2 - 4.0 / 3.0 * std::pow(o.eta, 3);
    o.S = 0.5 * o.loop_imag;
    return o;
}

ActionResult geometric_action(const EikonalField& field) {
    const CorrespondencePair pair = find_correspondence_pair(field);
    return action(build_broken_path(field, pair));
}

}  // namespace phasetunnel
