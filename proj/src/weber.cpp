#include "phasetunnel/weber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include "phasetunnel/errors.hpp"
#include "phasetunnel/ode.hpp"

namespace phasetunnel {

Jet::Jet(int order, double constant) : c_(order + 1, 0.0) { c_[0] = constant; }

Jet Jet::variable(int order, double at) {
    Jet j(order, at);
    if (order >= 1) j.c_[1] = 1.0;
    return j;
}

double Jet::derivative(int k) const { return std::tgamma(k + 1.0) * c_[k]; }

Jet Jet::operator+(const Jet& o) const {
    Jet r = *this;
    for (std::size_t k = 0; k < c_.size(); ++k) r.c_[k] += o.c_[k];
    return r;
}

Jet Jet::operator*(const Jet& o) const {
    Jet r(order());
    for (std::size_t i = 0; i < c_.size(); ++i)
        for (std::size_t j = 0; i + j < c_.size(); ++j) r.c_[i + j] += c_[i] * o.c_[j];
    return r;
}

Jet Jet::operator*(double s) const {
    Jet r = *this;
    for (double& v : r.c_) v *= s;
    return r;
}

Jet Jet::exp(const Jet& j) {
    Jet nil = j;
    nil.c_[0] = 0.0;
    Jet sum(j.order(), 1.0), term(j.order(), 1.0);
    for (int m = 1; m <= j.order(); ++m) {
        term = term * nil * (1.0 / m);
        sum = sum + term;
    }
    return sum * std::exp(j.c_[0]);
}

Jet Jet::cos_pi(int order, double e) {
    Jet r(order);
    const double c = std::cos(std::numbers::pi * e), s = std::sin(std::numbers::pi * e);
    const double cycle[4] = {c, -s, -c, s};
    double f = 1.0;
    for (int k = 0; k <= order; ++k) {
        r.c_[k] = cycle[k % 4] * std::pow(std::numbers::pi, k) / f;
        f *= k + 1;
    }
    return r;
}

Jet Jet::reciprocal_gamma_half(int order, double c) {
    Jet lg(order, boost::math::lgamma(c));
    double f = 1.0;
    for (int m = 1; m <= order; ++m) {
        f *= m;
        const double pg = m == 1 ? boost::math::digamma(c) : boost::math::polygamma(m - 1, c);
        lg.c_[m] = pg * std::pow(0.5, m) / f;
    }
    return exp(lg * -1.0);
}

void weber_initial_data(double epsilon, int k_max, std::vector<double>& y0,
                        std::vector<double>& dy0) {
    if (!(epsilon > 0.0)) throw InputError("weber: epsilon must be positive");
    if (k_max < 0) throw InputError("weber: k_max must be non-negative");
    const int K = k_max;
    const Jet cos_term = Jet::cos_pi(K, epsilon);
    const Jet one(K, 1.0);
    // 2^{-e/2}: exp(-(ln 2 / 2)(e + d)).
    const Jet pow2 = Jet::exp(Jet::variable(K, epsilon) * (-0.5 * std::numbers::ln2));
    const Jet value = (one + cos_term * -1.0) * pow2 *
                      Jet::reciprocal_gamma_half(K, 0.5 + 0.5 * epsilon) *
                      std::sqrt(std::numbers::pi);
    const Jet slope = (one + cos_term) * pow2 * Jet::reciprocal_gamma_half(K, 0.5 * epsilon) *
                      (std::sqrt(std::numbers::pi) * std::numbers::sqrt2);
    y0.assign(K + 1, 0.0);
    dy0.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) {
        y0[k] = value.derivative(k);
        dy0[k] = slope.derivative(k);
    }
}

std::vector<double> weber_series_coefficients(double epsilon, int terms) {
    std::vector<double> c(terms, 0.0);
    if (terms == 0) return c;
    c[0] = 1.0;
    for (int k = 0; k + 1 < terms; ++k)
        c[k + 1] = c[k] * (epsilon - 1.0 - 2.0 * k) * (epsilon - 2.0 - 2.0 * k) / (2.0 * (k + 1));
    return c;
}

WeberEval weber_family(double epsilon, int k_max, double z_min, double z_max, double tol) {
    if (!(epsilon > 0.0)) throw InputError("weber: epsilon must be positive");
    if (!(z_max > z_min)) throw InputError("weber: empty z range");
    if (!(tol >= 1e-12)) throw InputError("weber: tol must be at least 1e-12");
    const int K = k_max;
    WeberEval ev;
    ev.epsilon = epsilon;
    ev.k_max = K;
    ev.tol = tol;

    // Grid fine enough for a sixth-order difference of Y' to resolve the residual.
    const double zm = std::max(std::abs(z_min), std::abs(z_max));
    const double dz = std::pow(140.0 * tol / (10.0 * std::pow(0.5 * zm + 1.5, 8)), 1.0 / 6.0);
    const int npts = static_cast<int>(std::ceil((z_max - z_min) / dz)) + 1;
    const double step = (z_max - z_min) / (npts - 1);
    ev.z_grid.resize(npts);
    for (int i = 0; i < npts; ++i) ev.z_grid[i] = z_min + step * i;
    ev.values.assign(K + 1, std::vector<double>(npts, 0.0));
    ev.derivatives.assign(K + 1, std::vector<double>(npts, 0.0));

    std::vector<double> y0, dy0;
    weber_initial_data(epsilon, K, y0, dy0);

    auto rhs = [&](double z, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const double q = 0.5 - epsilon - 0.25 * z * z;
        for (int k = 0; k <= K; ++k) {
            dy(k) = y(K + 1 + k);
            dy(K + 1 + k) = -q * y(k) + (k > 0 ? k * y(k - 1) : 0.0);
        }
    };
    OdeOptions opt;
    opt.rtol = std::max(1e-14, 1e-3 * tol);
    opt.atol = 1e-3 * tol;
    auto store = [&](int i, const Eigen::VectorXd& y) {
        for (int k = 0; k <= K; ++k) {
            ev.values[k][i] = y(k);
            ev.derivatives[k][i] = y(K + 1 + k);
        }
    };
    Eigen::VectorXd start(2 * (K + 1));
    for (int k = 0; k <= K; ++k) {
        start(k) = y0[k];
        start(K + 1 + k) = dy0[k];
    }
    try {
        // First grid index at or above 0 (the grid may lie entirely on one side).
        int i0 = static_cast<int>(std::lower_bound(ev.z_grid.begin(), ev.z_grid.end(), 0.0) -
                                  ev.z_grid.begin());
        Eigen::VectorXd y = start;
        double z = 0.0;
        for (int i = i0; i < npts; ++i) {
            integrate_dopri5(rhs, z, ev.z_grid[i], y, opt);
            z = ev.z_grid[i];
            store(i, y);
        }
        y = start;
        z = 0.0;
        for (int i = i0 - 1; i >= 0; --i) {
            integrate_dopri5(rhs, z, ev.z_grid[i], y, opt);
            z = ev.z_grid[i];
            store(i, y);
        }
    } catch (const StepUnderflow& e) {
        throw NumericalError(std::string("weber: tolerance unachievable: ") + e.what());
    }

    constexpr double w[7] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
    ev.residuals.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) {
        for (int i = 3; i + 3 < npts; ++i) {
            double ypp = 0.0;
            for (int j = -3; j <= 3; ++j) ypp += w[j + 3] * ev.derivatives[k][i + j];
            ypp /= step;
            const double zz = ev.z_grid[i];
            const double q = 0.5 - epsilon - 0.25 * zz * zz;
            double res = ypp + q * ev.values[k][i];
            double scale = std::abs(ev.values[k][i]) + 1.0;
            if (k > 0) {
                res -= k * ev.values[k - 1][i];
                scale += k * std::abs(ev.values[k - 1][i]);
            }
            ev.residuals[k] = std::max(ev.residuals[k], std::abs(res) / scale);
        }
    }
    return ev;
}

WeberAsymptoticReport weber_asymptotic_check(const WeberEval& ev, double z_from) {
    WeberAsymptoticReport rep;
    rep.z_from = z_from;
    const double e = ev.epsilon;
    const double norm = std::sqrt(2.0 * std::numbers::pi) / std::tgamma(e);
    const std::vector<double> c = weber_series_coefficients(e, 3);
    auto deviation = [&](std::size_t i) {
        const double z = ev.z_grid[i];
        // Ratio in logarithmic form to avoid overflow of e^{z^2/4}.
        const double log_ratio = std::log(std::abs(ev.values[0][i])) - std::log(norm) -
                                 0.25 * z * z - (e - 1.0) * std::log(z);
        return std::copysign(1.0, ev.values[0][i]) * std::exp(log_ratio) - 1.0;
    };
    double dev8 = std::numeric_limits<double>::quiet_NaN(), dev12 = dev8;
    double best8 = 1e9, best12 = 1e9;
    for (std::size_t i = 0; i < ev.z_grid.size(); ++i) {
        const double z = ev.z_grid[i];
        if (z < z_from) continue;
        const double d = deviation(i);
        rep.max_deviation = std::max(rep.max_deviation, std::abs(d));
        const double series = c[1] / (z * z) + c[2] / (z * z * z * z);
        rep.max_series_mismatch = std::max(rep.max_series_mismatch, std::abs(d - series));
        if (std::abs(z - 8.0) < best8) {
            best8 = std::abs(z - 8.0);
            dev8 = d;
        }
        if (std::abs(z - 12.0) < best12) {
            best12 = std::abs(z - 12.0);
            dev12 = d;
        }
    }
    const double grid_step = ev.z_grid.size() > 1 ? ev.z_grid[1] - ev.z_grid[0] : 1.0;
    const bool have = best8 <= grid_step && best12 <= grid_step;
    rep.ratio_8_12 = have ? dev8 / dev12 : std::numeric_limits<double>::quiet_NaN();
    if (std::abs(c[1]) < 1e-12) {
        rep.decays = rep.max_deviation <= 1e-6;
    } else {
        const double expected = (12.0 / 8.0) * (12.0 / 8.0);
        rep.decays = have && rep.ratio_8_12 >= expected / 2.0 && rep.ratio_8_12 <= expected * 2.0;
    }
    return rep;
}

}  // namespace phasetunnel
