#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "phasetunnel/eikonal.hpp"
#include "phasetunnel/errors.hpp"
#include "phasetunnel/model.hpp"
#include "test_support.hpp"

using namespace phasetunnel;
using namespace pt_test;

namespace {

// Lowest eigenvalue of -d^2/ds^2 + w^2 s^2 by second-order finite differences
// on [-L, L]; w^2 = tau a / 2 for one harmonic mode.
double fd_oscillator_ground(double w2, double L = 12.0, int N = 4000) {
    const double dx = 2.0 * L / (N + 1);
    Eigen::VectorXd diag(N), off(N - 1);
    for (int i = 0; i < N; ++i) {
        const double s = -L + (i + 1) * dx;
        diag(i) = 2.0 / (dx * dx) + w2 * s * s;
    }
    off.setConstant(-1.0 / (dx * dx));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("V2 vanishes at the well and saturates at 1") {
    const PotentialModel pm = PotentialModel::radial(2);
    CHECK(v2_eval(pm, VecR(VecR::Zero(2))) == 0.0);
    for (double r : {0.1, 0.5, 2.0}) {
        VecR x(2);
        x << 0.0, r;
        CHECK(v2_eval(pm, x) == doctest::Approx(1.0 - std::exp(-r * r / 2.0)).epsilon(1e-15));
    }
    VecR far(2);
    far << 0.0, 40.0;
    CHECK(v2_eval(pm, far) == 1.0);
}

TEST_CASE("V2 gradient matches central differences") {
    std::mt19937_64 rng(11);
    MatR a(2, 2);
    a << 1.0, 0.3, 0.3, 2.0;
    const PotentialModel pm = PotentialModel::anisotropic(a);
    for (int k = 0; k < 20; ++k) {
        const VecR x = random_real(rng, 2, -1.0, 1.0);
        const VecR g = v2_grad(pm, x);
        for (int j = 0; j < 2; ++j) {
            const double d = 1e-5;
            VecR xp = x, xm = x;
            xp(j) += d;
            xm(j) -= d;
            const double fd = (v2_eval(pm, xp) - v2_eval(pm, xm)) / (2 * d);
            CHECK(std::abs(fd - g(j)) <= 1e-8 * std::max(std::abs(g(j)), 1e-3));
        }
    }
}

TEST_CASE("complex and real V2 agree on real points") {
    std::mt19937_64 rng(12);
    const PotentialModel pm = PotentialModel::radial(2);
    for (int k = 0; k < 10; ++k) {
        const VecR x = random_real(rng, 2, -1.0, 1.0);
        CHECK(std::abs(v2_eval(pm, VecC(x.cast<cd>())) - v2_eval(pm, x)) <= 1e-15);
        CHECK((v2_hessian(pm, VecC(x.cast<cd>())).real() - v2_hessian(pm, x)).norm() <= 1e-14);
    }
    CHECK((v2_hessian(pm, VecR(VecR::Zero(2))) - MatR::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("symbols at the origin") {
    const Model m = Model::radial(2, 0.1, 0.1);
    CHECK(p_eval(Symbol::P1, m, PhasePoint::zero(2)).real() == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(std::abs(p_eval(Symbol::P2, m, PhasePoint::zero(2))) == 0.0);
    PhasePoint z = PhasePoint::zero(2);
    z.xi(1) = cd(0.0, 0.3);
    CHECK(std::abs(p_eval(Symbol::P2, m, z) - cd(-0.09, 0.0)) <= 1e-16);
}

TEST_CASE("Hamilton fields") {
    const Model m = Model::radial(2, 0.1, 0.1);
    CHECK(hamilton_field(Symbol::P2, m, PhasePoint::zero(2)).distance(PhasePoint::zero(2)) == 0.0);
    PhasePoint z = PhasePoint::zero(2);
    z.xi(1) = 1.0;
    const PhasePoint f = hamilton_field(Symbol::P1, m, z);
    CHECK(std::abs(f.x(0)) == 0.0);
    CHECK(std::abs(f.x(1) - 2.0) == 0.0);
    CHECK(std::abs(f.xi(0)) == 0.0);
    CHECK(std::abs(f.xi(1) + 1.0) == 0.0);

    std::mt19937_64 rng(13);
    for (int k = 0; k < 10; ++k) {
        const PhasePoint w{random_complex(rng, 2, 0.5), random_complex(rng, 2, 0.5)};
        CHECK((hamilton_field(Symbol::P2, m, w).x - 2.0 * w.xi).norm() <= 1e-15);
    }
}

TEST_CASE("parameter validation") {
    ModelParams p;
    p.mu = -0.1;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = ModelParams{};
    p.n = 3;
    CHECK_THROWS_AS(p.validate(), InputError);
    MatR bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(PotentialModel::anisotropic(bad), InputError);
}

TEST_CASE("harmonic levels agree with a finite-difference oscillator") {
    Model m = Model::radial(2, 0.1, 0.5);
    CHECK(harmonic_levels(m, 1).level(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(2.0 * fd_oscillator_ground(0.25) - 1.0) <= 1e-4);

    Model m1 = Model::radial(1, 0.1, 2.0);
    MatR a1(1, 1);
    a1 << 2.0;
    m1.potential = PotentialModel::anisotropic(a1);
    CHECK(harmonic_levels(m1, 1).level(1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(fd_oscillator_ground(2.0) - std::sqrt(2.0)) <= 1e-4);

    Model m2 = Model::radial(2, 0.1, 0.5);
    MatR a2(2, 2);
    a2 << 1.0, 0.0, 0.0, 4.0;
    m2.potential = PotentialModel::anisotropic(a2);
    const HarmonicData hd = harmonic_levels(m2, 3);
    CHECK(hd.level(1) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(std::abs(fd_oscillator_ground(0.25) + fd_oscillator_ground(1.0) - 1.5) <= 1e-4);
    // next levels: one quantum in the soft mode, then in the stiff one
    CHECK(hd.level(2) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(hd.level(3) == doctest::Approx(3.5).epsilon(1e-14));
}

TEST_CASE("well Hessian is the square root of tau A / 2") {
    Model m = Model::radial(2, 0.1, 0.5);
    CHECK((well_hessian(m) - 0.5 * MatR::Identity(2, 2)).norm() <= 1e-15);
    MatR a(2, 2);
    a << 1.0, 0.0, 0.0, 4.0;
    m.potential = PotentialModel::anisotropic(a);
    m.params.tau = 2.0;
    MatR expect(2, 2);
    expect << 1.0, 0.0, 0.0, 2.0;
    CHECK((well_hessian(m) - expect).norm() <= 1e-14);

    std::mt19937_64 rng(14);
    for (int k = 0; k < 10; ++k) {
        MatR b = MatR::Random(2, 2);
        const MatR spd = b * b.transpose() + 0.1 * MatR::Identity(2, 2);
        m.potential = PotentialModel::anisotropic(spd);
        m.params.tau = 0.1 + (rng() % 100) / 50.0;
        const MatR mh = well_hessian(m);
        CHECK((mh * mh - 0.5 * m.params.tau * spd).norm() <= 1e-12);
    }
}

}  // TEST_SUITE
