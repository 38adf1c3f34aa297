#include "phasetunnel/flow.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "phasetunnel/errors.hpp"
#include "phasetunnel/ode.hpp"

namespace phasetunnel {

std::string to_string(Generator g) {
    switch (g) {
        case Generator::Hp1: return "Hp1";
        case Generator::Hp2: return "Hp2";
        case Generator::GradientFlowSigmaPlus: return "GradientFlowSigmaPlus";
        case Generator::GradientFlowSigmaMinus: return "GradientFlowSigmaMinus";
    }
    return "unknown";
}

namespace {

// State layout: [x (n), xi (n), action].
VecC pack(const PhasePoint& z, cd action) {
    const int n = z.dim();
    VecC y(2 * n + 1);
    y.head(n) = z.x;
    y.segment(n, n) = z.xi;
    y(2 * n) = action;
    return y;
}

FlowState unpack(const VecC& y, int n, cd time) {
    return {{y.head(n), y.segment(n, n)}, y(2 * n), time};
}

template <class Observer>
VecC run_flow(Symbol which, const Model& model, const PhasePoint& z0, cd t_end, double tol,
              Observer&& observe) {
    if (!(tol > 0.0)) throw InputError("flow tolerance must be positive");
    const int n = z0.dim();
    VecC y = pack(z0, 0.0);
    auto rhs = [&](double, const VecC& s, VecC& ds) {
        const PhasePoint z{s.head(n), s.segment(n, n)};
        const PhasePoint v = hamilton_field(which, model, z);
        ds.head(n) = t_end * v.x;
        ds.segment(n, n) = t_end * v.xi;
        ds(2 * n) = t_end * (z.xi.transpose() * v.x)(0);
    };
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    integrate_dopri5(rhs, 0.0, 1.0, y, opt, observe);
    if (!y.allFinite()) throw NumericalError("non-finite state in Hamiltonian flow");
    return y;
}

}  // namespace

FlowState integrate(Symbol which, const Model& model, const PhasePoint& z0, cd t_end, double tol) {
    const VecC y = run_flow(which, model, z0, t_end, tol, [](double, const VecC&) {});
    return unpack(y, z0.dim(), t_end);
}

PathSegment integrate_path(Symbol which, const Model& model, const PhasePoint& z0, cd t_end,
                           double tol) {
    PathSegment seg;
    seg.generator = which == Symbol::P1 ? Generator::Hp1 : Generator::Hp2;
    const int n = z0.dim();
    run_flow(which, model, z0, t_end, tol, [&](double s, const VecC& y) {
        seg.samples.push_back(unpack(y, n, s * t_end));
    });
    return seg;
}

FlowState p1_flow_closed_form(const PhasePoint& z0, cd t) {
    const int n = z0.dim();
    FlowState out;
    out.point = z0;
    out.point.xi(n - 1) -= t;
    out.point.x += 2.0 * t * z0.xi;
    out.point.x(n - 1) -= t * t;
    out.action = p1_action_closed_form(z0, t);
    out.time = t;
    return out;
}

cd p1_action_closed_form(const PhasePoint& z0, cd t) {
    const int n = z0.dim();
    const cd xi2 = (z0.xi.transpose() * z0.xi)(0);
    return 2.0 * (xi2 * t - z0.xi(n - 1) * t * t + t * t * t / 3.0);
}

double max_energy_drift(Symbol which, const Model& model, const PathSegment& seg) {
    if (seg.samples.empty()) return 0.0;
    const cd e0 = p_eval(which, model, seg.samples.front().point);
    double worst = 0.0;
    for (const auto& s : seg.samples) worst = std::max(worst, std::abs(p_eval(which, model, s.point) - e0));
    return worst;
}

void write_csv(std::ostream& os, const PathSegment& seg) {
    if (seg.samples.empty()) return;
    const int n = seg.samples.front().point.dim();
    os << "re_t,im_t";
    for (int i = 1; i <= n; ++i) os << ",re_x" << i << ",im_x" << i;
    for (int i = 1; i <= n; ++i) os << ",re_xi" << i << ",im_xi" << i;
    os << ",re_action,im_action\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& s : seg.samples) {
        os << s.time.real() << ',' << s.time.imag();
        for (int i = 0; i < n; ++i) os << ',' << s.point.x(i).real() << ',' << s.point.x(i).imag();
        for (int i = 0; i < n; ++i) os << ',' << s.point.xi(i).real() << ',' << s.point.xi(i).imag();
        os << ',' << s.action.real() << ',' << s.action.imag() << '\n';
    }
    os.precision(old);
}

}  // namespace phasetunnel
