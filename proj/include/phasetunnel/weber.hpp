#pragma once

#include <vector>

namespace phasetunnel {

/// Truncated Taylor series c_0 + c_1 d + ... + c_K d^K in one variable.
class Jet {
public:
    explicit Jet(int order, double constant = 0.0);
    static Jet variable(int order, double at);  // at + d

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double coefficient(int k) const { return c_[k]; }
    double& coefficient(int k) { return c_[k]; }
    /// k-th derivative at the expansion point: k! c_k.
    double derivative(int k) const;

    Jet operator+(const Jet& o) const;
    Jet operator*(const Jet& o) const;
    Jet operator*(double s) const;

    /// exp(j), using exp(c_0) times the exponential of the nilpotent part.
    static Jet exp(const Jet& j);
    /// cos(pi (e + d)).
    static Jet cos_pi(int order, double e);
    /// 1 / Gamma(c + d / 2), from polygamma values at c.
    static Jet reciprocal_gamma_half(int order, double c);

private:
    std::vector<double> c_;
};

/// Y_{0,e} and its e-derivatives Y_k on a uniform grid in z.
///
/// Y_0 is the solution of Y'' + (1/2 - e - z^2/4) Y = 0 that is entire in
/// (e, z) and grows like sqrt(2 pi)/Gamma(e) e^{z^2/4} z^{e-1} at +infinity,
/// namely Y_0 = U(e - 1/2, -z) - cos(pi e) U(e - 1/2, z). Its values at z = 0
/// are closed-form; the chain Y_k'' + (1/2 - e - z^2/4) Y_k = k Y_{k-1} is
/// integrated outward from 0 with e-derivatives of the initial data.
struct WeberEval {
    double epsilon = 1.0;
    int k_max = 0;
    double tol = 1e-10;
    std::vector<double> z_grid;
    std::vector<std::vector<double>> values;       // [k][i]
    std::vector<std::vector<double>> derivatives;  // [k][i], d/dz
    std::vector<double> residuals;                 // per k: max |residual| / scale
};

WeberEval weber_family(double epsilon, int k_max, double z_min, double z_max, double tol);

/// Y_0(0), Y_0'(0) and their e-derivatives up to k_max.
void weber_initial_data(double epsilon, int k_max, std::vector<double>& y0,
                        std::vector<double>& dy0);

/// Coefficients c_s of Y_0 ~ sqrt(2 pi)/Gamma(e) e^{z^2/4} z^{e-1} sum_s c_s z^{-2s}.
std::vector<double> weber_series_coefficients(double epsilon, int terms);

struct WeberAsymptoticReport {
    double z_from = 0.0;
    double max_deviation = 0.0;        // max |ratio - 1| on [z_from, z_max]
    double max_series_mismatch = 0.0;  // max |(ratio - 1) - (c_1/z^2 + c_2/z^4)|
    double ratio_8_12 = 0.0;           // dev(8) / dev(12), nan when unavailable
    bool decays = false;
};

WeberAsymptoticReport weber_asymptotic_check(const WeberEval& eval, double z_from = 8.0);

}  // namespace phasetunnel
