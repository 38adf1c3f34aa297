#include <cmath>
#include <random>

#include <doctest.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "phasetunnel/eikonal.hpp"
#include "test_support.hpp"

using namespace phasetunnel;
using namespace pt_test;

namespace {

double radial_phi2(double tau, double r) {
    return std::sqrt(tau) * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                                [](double s) { return std::sqrt(1.0 - std::exp(-s * s / 2.0)); }, 0.0, r, 12,
                                1e-14);
}

}  // namespace

TEST_SUITE("eikonal") {

TEST_CASE("phi2 vanishes at the well") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    const Phi2Value v = f.phi2_at(VecR::Zero(2));
    CHECK(v.value == 0.0);
    CHECK(v.grad.norm() == 0.0);
}

TEST_CASE("radial phi2 matches the one-dimensional quadrature") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    VecR x(2);
    x << 0.0, 0.1005;
    const double ref = radial_phi2(0.1, 0.1005);
    CHECK(ref == doctest::Approx(1.13e-3).epsilon(0.01));
    CHECK(std::abs(f.phi2_at(x).value - ref) <= 1e-10);
    // regression value of the quadrature oracle
    CHECK(ref == doctest::Approx(1.128529927368586e-03).epsilon(1e-12));

    // rotation invariance for A = I
    std::mt19937_64 rng(31);
    for (int k = 0; k < 6; ++k) {
        const double r = 0.02 + 0.2 * (rng() % 1000) / 1000.0;
        const double a = 6.283185307179586 * (rng() % 1000) / 1000.0;
        VecR y(2);
        y << r * std::cos(a), r * std::sin(a);
        CHECK(std::abs(f.phi2_at(y).value - radial_phi2(0.1, r)) <= 1e-10);
    }
}

TEST_CASE("phi2 solves the eikonal equation with a consistent gradient") {
    MatR a(2, 2);
    a << 1.0, 0.2, 0.2, 1.5;
    Model m = Model::radial(2, 0.1, 0.1);
    m.potential = PotentialModel::anisotropic(a);
    const EikonalField f(m);
    std::mt19937_64 rng(32);
    for (int k = 0; k < 10; ++k) {
        const VecR x = random_real(rng, 2, -0.15, 0.15);
        const Phi2Value v = f.phi2_at(x);
        CHECK(std::abs(v.grad.squaredNorm() - m.params.tau * v2_eval(m.potential, x)) <= 1e-8);
        CHECK(v.eikonal_residual <= 1e-8);
        for (int j = 0; j < 2; ++j) {
            const double d = 1e-5;
            VecR xp = x, xm = x;
            xp(j) += d;
            xm(j) -= d;
            const double fd = (f.phi2_at(xp).value - f.phi2_at(xm).value) / (2 * d);
            CHECK(std::abs(fd - v.grad(j)) <= 1e-6 * std::max(1e-3, std::abs(v.grad(j))));
        }
    }
}

TEST_CASE("small-x behaviour is the quadratic form of M") {
    MatR a(2, 2);
    a << 1.0, 0.0, 0.0, 4.0;
    Model m = Model::radial(2, 0.1, 0.5);
    m.potential = PotentialModel::anisotropic(a);
    const EikonalField f(m);
    const MatR mh = f.well_hessian();
    VecR x(2);
    x << 0.08, -0.05;
    double prev = -1.0;
    for (int k = 0; k < 3; ++k) {
        const double err = std::abs(f.phi2_at(x).value - 0.5 * x.dot(mh * x));
        if (prev > 0.0) CHECK(prev / err >= 8.0);  // at least cubic under halving
        prev = err;
        x *= 0.5;
    }
}

TEST_CASE("phi2 increases along rays from the well") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    VecR dir(2);
    dir << 0.6, 0.8;
    double last = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double v = f.phi2_at(0.02 * k * dir).value;
        CHECK(v > last);
        last = v;
    }
}

TEST_CASE("characteristics end at the target point") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    VecR x(2);
    x << 0.03, 0.1;
    const Characteristic c = f.characteristic_to(x);
    CHECK((c.x.back() - x).norm() <= 1e-10);
    CHECK(std::abs(c.phi.back() - f.phi2_at(x).value) <= 1e-12);
    CHECK(f.cache_size() >= 1);
}

}  // TEST_SUITE
