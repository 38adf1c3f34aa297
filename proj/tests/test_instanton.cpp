#include <cmath>

#include <doctest.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "phasetunnel/instanton.hpp"
#include "test_support.hpp"

using namespace phasetunnel;
using namespace pt_test;

namespace {

// x = mu + tau (1 - exp(-x^2/2)) by bisection.
double crossing_height(double mu, double tau) {
    double lo = mu, hi = mu + tau;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (mid - mu - tau * (1.0 - std::exp(-mid * mid / 2.0)) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double sqrt_v2_integral(double r) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [](double s) { return std::sqrt(1.0 - std::exp(-s * s / 2.0)); }, 0.0, r, 12, 1e-14);
}

}  // namespace

TEST_SUITE("instanton") {

TEST_CASE("correspondence pair of the radial model") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    const CorrespondencePair p = find_correspondence_pair(f);
    const double xs = crossing_height(0.1, 0.1);
    CHECK(xs == doctest::Approx(0.1005).epsilon(1e-3));
    CHECK(std::abs(p.x_plus(0)) <= 1e-12);
    CHECK(std::abs(p.x_plus(1) - xs) <= 1e-10);
    const double eta = std::sqrt(0.1 * (1.0 - std::exp(-xs * xs / 2.0)));
    CHECK(eta == doctest::Approx(0.0225).epsilon(3e-3));
    CHECK(std::abs(p.eta - eta) <= 1e-10);
    CHECK(std::abs(p.t_corr.real()) <= 1e-12);
    CHECK(std::abs(p.t_corr.imag() - 2.0 * eta) <= 1e-10);
    CHECK(p.residual <= 1e-10);
    CHECK(p1_flow_closed_form(p.rho_plus, p.t_corr).point.distance(p.rho_minus) <= 1e-10);
}

TEST_CASE("the pair is invariant under reflection of x' for A = I") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    const CorrespondencePair base = find_correspondence_pair(f);
    for (double g : {-0.03, 0.02}) {
        CorrespondenceOptions o;
        o.tangential_guess = VecR::Constant(1, g);
        const CorrespondencePair p = find_correspondence_pair(f, o);
        CHECK(p.rho_plus.distance(base.rho_plus) <= 1e-9);
    }
}

TEST_CASE("broken path structure") {
    const EikonalField f(Model::radial(2, 0.1, 0.1));
    const CorrespondencePair p = find_correspondence_pair(f);
    const BrokenPath path = build_broken_path(f, p);
    CHECK(path.gamma2_plus.back().point.distance(p.rho_plus) <= 1e-8);
    CHECK(path.gamma2_minus.front().point.distance(p.rho_minus) <= 1e-8);
    for (const PathSegment* seg : {&path.gamma2_plus, &path.gamma2_minus})
        for (const FlowState& s : seg->samples) {
            CHECK(s.point.xi.real().cwiseAbs().maxCoeff() == 0.0);
            CHECK(s.point.x.imag().cwiseAbs().maxCoeff() == 0.0);
        }
    for (const FlowState& s : path.gamma1.samples) {
        CHECK(s.point.x.imag().cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(s.point.xi.real().cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("action of the radial model") {
    const Model m = Model::radial(2, 0.1, 0.1);
    const EikonalField f(m);
    const CorrespondencePair p = find_correspondence_pair(f);
    const ActionResult a = action(build_broken_path(f, p));
    const double phi2 = std::sqrt(0.1) * sqrt_v2_integral(p.x_plus(1));
    CHECK(std::abs(a.per_segment[0].imag() - phi2) <= 1e-10);
    CHECK(std::abs(a.per_segment[2].imag() - phi2) <= 1e-10);
    CHECK(std::abs(a.per_segment[1] - cd(0.0, -4.0 / 3.0 * std::pow(p.eta, 3))) <= 1e-14);
    const double loop = 2.0 * phi2 - 4.0 / 3.0 * std::pow(p.eta, 3);
    CHECK(loop == doctest::Approx(2.24e-3).epsilon(2e-3));
    CHECK(std::abs(a.loop_imag - loop) / loop <= 1e-8);
    CHECK(a.S == doctest::Approx(0.5 * a.loop_imag).epsilon(1e-15));
    // frozen regression values
    CHECK(a.loop_imag == doctest::Approx(2.2421530499374e-3).epsilon(1e-9));
    CHECK(a.S == doctest::Approx(1.1210765249687e-3).epsilon(1e-9));
}

TEST_CASE("radial oracle agrees with the broken path") {
    for (auto [mu, tau] : {std::pair{0.1, 0.1}, std::pair{0.2, 0.05}}) {
        const Model m = Model::radial(2, mu, tau);
        const RadialOracle o = action_radial_oracle(m);
        const ActionResult a = geometric_action(EikonalField(m));
        CHECK(std::abs(a.S - o.S) / o.S <= 1e-8);
        CHECK(o.x_star == doctest::Approx(crossing_height(mu, tau)).epsilon(1e-12));
    }
}

TEST_CASE("small tau: S approaches sqrt(tau) int_0^mu sqrt(V2)") {
    double prev = 1.0;
    for (double tau : {0.1, 0.05, 0.025, 0.0125}) {
        const RadialOracle o = action_radial_oracle(Model::radial(2, 0.1, tau));
        const double lead = std::sqrt(tau) * sqrt_v2_integral(0.1);
        const double dev = std::abs(o.S / lead - 1.0);
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev <= 0.05);
}

TEST_CASE("one-dimensional model") {
    const Model m = Model::radial(1, 0.1, 0.1);
    const ActionResult a = geometric_action(EikonalField(m));
    const RadialOracle o = action_radial_oracle(m);
    CHECK(std::abs(a.S - o.S) / o.S <= 1e-8);
    CHECK(a.S == doctest::Approx(1.1210765249687e-3).epsilon(1e-9));
}

}  // TEST_SUITE
