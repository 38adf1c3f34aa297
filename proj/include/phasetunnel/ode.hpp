#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0: estimate from the right-hand side
    double min_step = 0.0;      // 0: 1e-13 * |s1 - s0|
    std::size_t max_steps = 2'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double last_step = 0.0;
};

/// Raised when the step size collapses. The state passed by reference to the
/// integrator holds the last accepted point, `s_reached` its parameter.
class StepUnderflow : public NumericalError {
public:
    StepUnderflow(const std::string& what, double s_reached)
        : NumericalError(what), s_reached_(s_reached) {}
    double s_reached() const noexcept { return s_reached_; }

private:
    double s_reached_;
};

namespace detail {

template <class Vec>
double scaled_rms(const Vec& err, const Vec& y0, const Vec& y1, double atol, double rtol) {
    double acc = 0.0;
    const auto m = err.size();
    for (decltype(err.size()) i = 0; i < m; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = std::abs(err[i]) / sc;
        acc += r * r;
    }
    return m > 0 ? std::sqrt(acc / static_cast<double>(m)) : 0.0;
}

}  // namespace detail

/// Dormand-Prince 5(4) with FSAL and standard step-size control, stepping the
/// real parameter s from s0 to s1 (either direction). `rhs(s, y, dy)` fills dy;
/// `observe(s, y)` is called at s0 and after every accepted step.
template <class Vec, class Rhs, class Observer>
OdeStats integrate_dopri5(Rhs&& rhs, double s0, double s1, Vec& y, const OdeOptions& opt,
                          Observer&& observe) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

    OdeStats stats;
    observe(s0, y);
    const double span = s1 - s0;
    if (span == 0.0) return stats;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double min_step = opt.min_step > 0 ? opt.min_step : 1e-13 * std::abs(span);

    Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, ynew = y, err = y;
    rhs(s0, y, k1);

    double step = opt.initial_step;
    if (step <= 0.0) {
        double ny = 0.0, nd = 0.0;
        for (decltype(y.size()) i = 0; i < y.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::abs(y[i]);
            ny += std::pow(std::abs(y[i]) / sc, 2);
            nd += std::pow(std::abs(k1[i]) / sc, 2);
        }
        step = (nd > 1e-20 && ny > 1e-20) ? 0.01 * std::sqrt(ny / nd) : 1e-6 * std::abs(span);
        step = std::min(step, 0.1 * std::abs(span));
    }
    step = std::min(std::abs(step), std::abs(span));

    double s = s0;
    while (dir * (s1 - s) > 0.0) {
        if (stats.accepted + stats.rejected >= opt.max_steps)
            throw StepUnderflow("integrator exceeded max_steps", s);
        bool last = false;
        if (step >= std::abs(s1 - s)) {
            step = std::abs(s1 - s);
            last = true;
        }
        const double hs = dir * step;
        tmp = y + hs * a21 * k1;
        rhs(s + c2 * hs, tmp, k2);
        tmp = y + hs * (a31 * k1 + a32 * k2);
        rhs(s + c3 * hs, tmp, k3);
        tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(s + c4 * hs, tmp, k4);
        tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(s + c5 * hs, tmp, k5);
        tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(s + hs, tmp, k6);
        ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(s + hs, ynew, k7);
        err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = detail::scaled_rms(err, y, ynew, opt.atol, opt.rtol);
        if (!std::isfinite(en)) {
            step *= 0.25;
            ++stats.rejected;
            if (step < min_step) throw StepUnderflow("non-finite state in integrator", s);
            continue;
        }
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        if (en <= 1.0) {
            s = last ? s1 : s + hs;
            y = ynew;
            k1 = k7;
            ++stats.accepted;
            stats.last_step = step;
            observe(s, y);
            step *= std::min(fac, 5.0);
        } else {
            ++stats.rejected;
            step *= std::max(fac, 0.2);
            if (step < min_step) throw StepUnderflow("step size underflow", s);
        }
    }
    return stats;
}

template <class Vec, class Rhs>
OdeStats integrate_dopri5(Rhs&& rhs, double s0, double s1, Vec& y, const OdeOptions& opt) {
    return integrate_dopri5(std::forward<Rhs>(rhs), s0, s1, y, opt, [](double, const Vec&) {});
}

}  // namespace phasetunnel
