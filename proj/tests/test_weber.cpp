#include <cmath>
#include <numbers>

#include <doctest.h>

#include "phasetunnel/errors.hpp"
#include "phasetunnel/weber.hpp"

using namespace phasetunnel;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// Polynomial-times-Gaussian solutions at integer e, normalized to the growth
// sqrt(2 pi)/Gamma(e) e^{z^2/4} z^{e-1}.
double exact_integer(double e, double z) {
    const double g = std::exp(0.25 * z * z);
    if (e == 1.0) return kSqrt2Pi * g;
    if (e == 2.0) return kSqrt2Pi * z * g;
    return 0.5 * kSqrt2Pi * (z * z + 1.0) * g;  // e = 3
}

}  // namespace

TEST_SUITE("weber") {

TEST_CASE("initial data at z = 0") {
    std::vector<double> y, dy;
    weber_initial_data(1.0, 0, y, dy);
    CHECK(y[0] == doctest::Approx(kSqrt2Pi).epsilon(1e-14));
    CHECK(y[0] == doctest::Approx(2.50663).epsilon(1e-5));
    CHECK(std::abs(dy[0]) <= 1e-15);
    weber_initial_data(2.0, 0, y, dy);
    CHECK(std::abs(y[0]) <= 1e-15);
    CHECK(dy[0] == doctest::Approx(kSqrt2Pi).epsilon(1e-14));
}

TEST_CASE("integer e: exact solutions on [0, 6]") {
    for (double e : {1.0, 2.0, 3.0}) {
        const WeberEval ev = weber_family(e, 0, 0.0, 6.0, 1e-10);
        double worst = 0.0;
        for (std::size_t i = 0; i < ev.z_grid.size(); ++i) {
            const double z = ev.z_grid[i], ex = exact_integer(e, z);
            if (ex == 0.0) continue;
            worst = std::max(worst, std::abs(ev.values[0][i] - ex) / std::abs(ex));
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("residual certificates") {
    for (double e : {0.5, 1.0, 2.0}) {
        const WeberEval ev = weber_family(e, 3, -2.0, 12.0, 1e-10);
        REQUIRE(ev.residuals.size() == 4);
        for (double r : ev.residuals) CHECK(r <= 1e-10);
        CHECK(ev.values.size() == 4);
        CHECK(ev.derivatives[0].size() == ev.z_grid.size());
    }
}

TEST_CASE("chain members are e-derivatives of Y0") {
    const double d = 1e-4;
    const WeberEval c = weber_family(1.0, 1, 0.0, 4.0, 1e-11);
    const WeberEval p = weber_family(1.0 + d, 0, 0.0, 4.0, 1e-11);
    const WeberEval m = weber_family(1.0 - d, 0, 0.0, 4.0, 1e-11);
    REQUIRE(p.z_grid.size() == c.z_grid.size());
    for (std::size_t i = 0; i < c.z_grid.size(); i += 17) {
        const double fd = (p.values[0][i] - m.values[0][i]) / (2 * d);
        CHECK(std::abs(fd - c.values[1][i]) <= 1e-6 * (std::abs(c.values[1][i]) + 1.0));
    }
}

TEST_CASE("Y0 is positive on the positive half line") {
    for (double e : {0.5, 1.0, 2.0}) {
        const WeberEval ev = weber_family(e, 0, 0.0, 10.0, 1e-10);
        for (std::size_t i = 1; i < ev.z_grid.size(); ++i) CHECK(ev.values[0][i] > 0.0);
    }
}

TEST_CASE("large-z asymptotics") {
    const WeberEval e1 = weber_family(1.0, 0, 0.0, 12.0, 1e-10);
    CHECK(weber_asymptotic_check(e1).max_deviation <= 1e-10);

    const WeberEval e05 = weber_family(0.5, 0, 0.0, 12.0, 1e-10);
    const WeberAsymptoticReport r = weber_asymptotic_check(e05);
    CHECK(r.decays);
    CHECK(r.ratio_8_12 >= 1.125);
    CHECK(r.ratio_8_12 <= 4.5);

    const WeberEval e2 = weber_family(2.0, 0, 0.0, 12.0, 1e-10);
    CHECK(weber_asymptotic_check(e2, 10.0).max_deviation <= 1e-6);
}

TEST_CASE("series coefficients") {
    // e = 1 and e = 2 series terminate after the leading term
    for (double e : {1.0, 2.0}) {
        const std::vector<double> c = weber_series_coefficients(e, 3);
        CHECK(c[0] == 1.0);
        CHECK(std::abs(c[1]) <= 1e-15);
    }
    // e = 3: (z^2 + 1) = z^2 (1 + z^-2)
    const std::vector<double> c3 = weber_series_coefficients(3.0, 3);
    CHECK(c3[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(c3[2]) <= 1e-15);
}

TEST_CASE("jet arithmetic") {
    const Jet x = Jet::variable(4, 0.5);
    const Jet ex = Jet::exp(x);
    for (int k = 0; k <= 4; ++k) CHECK(ex.derivative(k) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
    const Jet c = Jet::cos_pi(3, 1.0);
    CHECK(c.derivative(0) == doctest::Approx(-1.0));
    CHECK(std::abs(c.derivative(1)) <= 1e-15);
    CHECK(c.derivative(2) == doctest::Approx(std::numbers::pi * std::numbers::pi).epsilon(1e-14));
    const Jet sq = x * x;
    CHECK(sq.derivative(0) == doctest::Approx(0.25));
    CHECK(sq.derivative(1) == doctest::Approx(1.0));
    CHECK(sq.derivative(2) == doctest::Approx(2.0));
    CHECK(sq.derivative(3) == 0.0);
}

TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(weber_family(0.0, 1, 0.0, 4.0, 1e-10), InputError);
    CHECK_THROWS_AS(weber_family(1.0, -1, 0.0, 4.0, 1e-10), InputError);
    CHECK_THROWS_AS(weber_family(1.0, 1, 4.0, 0.0, 1e-10), InputError);
}

}  // TEST_SUITE
