#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "phasetunnel/flow.hpp"
#include "test_support.hpp"

using namespace phasetunnel;
using namespace pt_test;

TEST_SUITE("flow") {

TEST_CASE("zero time is the identity") {
    const Model m = Model::radial(2, 0.1, 0.1);
    std::mt19937_64 rng(21);
    const PhasePoint z{random_complex(rng, 2, 0.3), random_complex(rng, 2, 0.3)};
    for (Symbol s : {Symbol::P1, Symbol::P2}) {
        const FlowState f = integrate(s, m, z, cd(0.0, 0.0), 1e-12);
        CHECK(f.point.distance(z) == 0.0);
        CHECK(std::abs(f.action) == 0.0);
    }
    CHECK(p1_flow_closed_form(z, 0.0).point.distance(z) == 0.0);
}

TEST_CASE("numerical p1 flow matches the closed form") {
    const Model m = Model::radial(2, 0.1, 0.1);
    PhasePoint z = PhasePoint::zero(2);
    z.xi(1) = cd(0.0, 0.5);
    const cd t(0.0, 1.0);
    const FlowState num = integrate(Symbol::P1, m, z, t, 1e-12);
    const FlowState ref = p1_flow_closed_form(z, t);
    CHECK(num.point.distance(ref.point) <= 1e-10);
    CHECK(std::abs(num.action - ref.action) <= 1e-10);

    std::mt19937_64 rng(22);
    for (int k = 0; k < 10; ++k) {
        const PhasePoint w{random_complex(rng, 2, 0.3), random_complex(rng, 2, 0.3)};
        const cd tt(0.4 * (rng() % 100) / 100.0 - 0.2, 0.5);
        const FlowState a = integrate(Symbol::P1, m, w, tt, 1e-12);
        const FlowState b = p1_flow_closed_form(w, tt);
        CHECK(a.point.distance(b.point) <= 1e-10);
        CHECK(std::abs(a.action - p1_action_closed_form(w, tt)) <= 1e-10);
    }
}

TEST_CASE("the well is a fixed point of the p2 flow") {
    const Model m = Model::radial(2, 0.1, 0.1);
    for (cd t : {cd(1.0, 0.0), cd(0.0, 2.0), cd(-0.5, 0.5)}) {
        const FlowState f = integrate(Symbol::P2, m, PhasePoint::zero(2), t, 1e-12);
        CHECK(f.point.distance(PhasePoint::zero(2)) == 0.0);
        CHECK(std::abs(f.action) == 0.0);
    }
}

TEST_CASE("vertical p1 ray returns with reversed momentum") {
    const double xn = 0.1005, eta = 0.0224;
    PhasePoint z = PhasePoint::zero(2);
    z.x(1) = xn;
    z.xi(1) = cd(0.0, eta);
    const FlowState f = p1_flow_closed_form(z, cd(0.0, 2.0 * eta));
    CHECK(std::abs(f.point.xi(1) - cd(0.0, -eta)) <= 1e-17);
    CHECK(std::abs(f.point.x(1) - xn) <= 1e-17);
    const cd expected = cd(0.0, -4.0 / 3.0) * std::pow(eta, 3);
    CHECK(std::abs(f.action - expected) <= 1e-18);
    const Model m = Model::radial(2, 0.1, 0.1);
    const FlowState num = integrate(Symbol::P1, m, z, cd(0.0, 2.0 * eta), 1e-12);
    CHECK(std::abs(num.action - expected) <= 1e-12 * std::abs(expected) + 1e-18);
}

TEST_CASE("energy is conserved along both flows") {
    const Model m = Model::radial(2, 0.1, 0.1);
    std::mt19937_64 rng(23);
    for (int k = 0; k < 8; ++k) {
        const PhasePoint w{random_complex(rng, 2, 0.3), random_complex(rng, 2, 0.2)};
        for (Symbol s : {Symbol::P1, Symbol::P2}) {
            const PathSegment seg = integrate_path(s, m, w, cd(0.3, 0.4), 1e-12);
            CHECK(max_energy_drift(s, m, seg) <= 1e-10);
        }
        // exact for the closed form
        const cd e0 = p_eval(Symbol::P1, m, w);
        for (double t : {0.1, 0.7, 1.3})
            CHECK(std::abs(p_eval(Symbol::P1, m, p1_flow_closed_form(w, cd(t, -t)).point) - e0) <= 1e-14);
    }
}

TEST_CASE("reversing time retraces the p2 flow") {
    const Model m = Model::radial(2, 0.1, 0.1);
    std::mt19937_64 rng(24);
    const PhasePoint w{random_complex(rng, 2, 0.3), random_complex(rng, 2, 0.2)};
    const FlowState f = integrate(Symbol::P2, m, w, cd(0.5, 0.2), 1e-12);
    const FlowState b = integrate(Symbol::P2, m, f.point, cd(-0.5, -0.2), 1e-12);
    CHECK(b.point.distance(w) <= 1e-9);
    CHECK(std::abs(f.action + b.action) <= 1e-9);
}

TEST_CASE("segment CSV has one row per sample") {
    const Model m = Model::radial(1, 0.1, 0.1);
    PhasePoint z = PhasePoint::zero(1);
    z.xi(0) = cd(0.0, 0.2);
    const PathSegment seg = integrate_path(Symbol::P1, m, z, cd(0.0, 0.4), 1e-10);
    std::ostringstream os;
    write_csv(os, seg);
    const std::string s = os.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(seg.samples.size()) + 1);
    CHECK(s.rfind("re_t,im_t", 0) == 0);
}

}  // TEST_SUITE
