#include <cmath>
#include <sstream>

#include <doctest.h>

#include "phasetunnel/banded_lu.hpp"
#include "phasetunnel/errors.hpp"
#include "phasetunnel/spectral.hpp"

using namespace phasetunnel;

namespace {

double max_abs(const SpMat& m) {
    double w = 0.0;
    for (Eigen::Index c = 0; c < m.outerSize(); ++c)
        for (SpMat::InnerIterator it(m, c); it; ++it) w = std::max(w, std::abs(it.value()));
    return w;
}

GridSpec small_grid(int n, int points, double half_width) {
    GridSpec g;
    g.n = n;
    g.points = points;
    g.half_width = half_width;
    return g;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("assembly structure") {
    Model m = Model::radial(1, 0.1, 0.1, 1.0, 4e-3);
    const GridSpec g = small_grid(1, 128, 0.35);
    const TranslatedOperator op = assemble(m, g, 0.05);
    CHECK(op.matrix.rows() == 256);
    CHECK(max_abs(op.matrix - SpMat(op.matrix.transpose())) == 0.0);

    // the P2 entry at the grid point nearest 0: tau V2(-i theta) + stencil diagonal
    const int i0 = 63;  // x = -0.35 + 63 dx is the point nearest 0 for N = 128
    const double x = -0.35 + i0 * g.spacing();
    const double h = m.params.planck_h, dx = g.spacing();
    const cd v2 = 1.0 - std::exp(-0.5 * cd(x, -0.05) * cd(x, -0.05));
    const cd expect = 0.1 * v2 + h * h * 2.5 / (dx * dx);
    CHECK(std::abs(op.matrix.coeff(2 * i0 + 1, 2 * i0 + 1) - expect) <= 1e-15);
    CHECK(std::abs(op.matrix.coeff(2 * i0, 2 * i0 + 1) - h) == 0.0);

    m.params.coupling_c = 0.0;
    const TranslatedOperator d = assemble(m, g, 0.05);
    for (Eigen::Index c = 0; c < d.matrix.outerSize(); ++c)
        for (SpMat::InnerIterator it(d.matrix, c); it; ++it)
            CHECK((it.row() % 2) == (it.col() % 2));

    // the P2 block turns real as theta -> 0
    double prev = 1.0;
    for (double th : {1e-2, 1e-3, 1e-4}) {
        const TranslatedOperator t = assemble(m, g, th);
        double im = 0.0;
        for (Eigen::Index c = 1; c < t.matrix.outerSize(); c += 2)
            for (SpMat::InnerIterator it(t.matrix, c); it; ++it) im = std::max(im, std::abs(it.value().imag()));
        CHECK(im < prev);
        CHECK(im <= 0.1 * th);
        prev = im;
    }
}

TEST_CASE("assembly is deterministic and validates its input") {
    const Model m = Model::radial(1, 0.1, 0.1, 1.0, 4e-3);
    const GridSpec g = small_grid(1, 128, 0.35);
    CHECK(max_abs(assemble(m, g, 0.05).matrix - assemble(m, g, 0.05).matrix) == 0.0);
    CHECK_THROWS_AS(assemble(m, g, 0.0), InputError);
    CHECK_THROWS_AS(assemble(m, g, 0.6), InputError);
    CHECK_THROWS_AS(assemble(m, small_grid(1, 32, 0.35), 0.05), InputError);
    CHECK_THROWS_AS(assemble(m, small_grid(2, 128, 0.2), 0.05), InputError);
    try {
        assemble(m, g, 0.05, 1000);
        FAIL("memory bound not enforced");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("bytes required") != std::string::npos);
    }
}

TEST_CASE("default theta") {
    CHECK(default_theta(1e-3) == doctest::Approx(4e-3 * std::log(1e3)).epsilon(1e-15));
    CHECK(default_theta(0.1) == 0.2);
}

TEST_CASE("banded LU solves against a dense reference") {
    const Model m = Model::radial(1, 0.1, 0.1, 1.0, 4e-3);
    const TranslatedOperator op = assemble(m, small_grid(1, 128, 0.35), 0.05);
    const SpMat a = op.matrix - cd(2e-4, 1e-5) * SpMat(MatC::Identity(256, 256).sparseView());
    const auto [kl, ku] = BandedLU::bandwidths(a);
    CHECK(kl == 4);
    CHECK(ku == 4);
    BandedLU lu;
    lu.factor(a, kl, ku);
    CHECK(!lu.singular());
    VecC b = VecC::LinSpaced(256, cd(1.0, 0.0), cd(-1.0, 2.0));
    VecC x = b;
    lu.solve(x);
    CHECK((a * x - b).norm() <= 1e-10 * b.norm());
    const VecC xd = MatC(a).partialPivLu().solve(b);
    CHECK((x - xd).norm() <= 1e-10 * xd.norm());
}

TEST_CASE("shift-invert agrees with the dense eigensolver") {
    const Model m = Model::radial(1, 0.1, 0.1, 1.0, 4e-3);
    const TranslatedOperator op = assemble(m, small_grid(1, 128, 0.35), default_theta(4e-3));
    const ResonanceResult r = find_resonance(op, cd(harmonic_levels(m, 1).level(1) * 4e-3, 0.0), {}, true);
    CHECK(std::abs(dense_eigenvalue_nearest(op, r.rho) - r.rho) <= 1e-9);
    CHECK(r.eigvec_residual <= 1e-9);
    CHECK(r.eigvec.size() == 256);
}

TEST_CASE("decoupled limit: real level near e1 h") {
    const Model m = Model::radial(1, 0.1, 0.1, 0.0, 1e-3);
    const ResonanceResult r = compute_resonance(m, grid_policy(m, 1e-3));
    CHECK(std::abs(r.rho.imag()) <= 10.0 * r.eigvec_residual);
    const double e1h = harmonic_levels(m, 1).level(1) * 1e-3;
    CHECK(std::abs(r.rho.real() - e1h) <= 1e-6);
}

TEST_CASE("coupled resonance at h = 1e-3 (regression)") {
    const Model m = Model::radial(1, 0.1, 0.1, 1.0, 1e-3);
    const GridSpec g = grid_policy(m, 1e-3);
    CHECK(g.points == 1880);
    const ResonanceResult r = compute_resonance(m, g);
    CHECK(r.rho.imag() < 0.0);
    CHECK(r.eigvec_residual <= 1e-9);
    CHECK(r.theta_drift <= std::max(1e-10, 0.05 * std::abs(r.rho.imag())));
    CHECK(r.rho.real() == doctest::Approx(2.362938917962237e-04).epsilon(1e-9));
    CHECK(r.rho.imag() == doctest::Approx(-2.6690685606845613e-06).epsilon(1e-6));
    CHECK(accept_sample(r, AcceptanceRule{}));

    // doubling N
    GridSpec fine = g;
    fine.points *= 2;
    const ResonanceResult rf = compute_resonance(m, fine);
    CHECK(std::abs(rf.rho.real() - r.rho.real()) <= 1e-3 * 1e-3);
    CHECK(std::abs(rf.rho.imag() - r.rho.imag()) <= 0.1 * std::abs(r.rho.imag()));
}

TEST_CASE("iterative and sparse direct solvers agree on a small 2D grid") {
    const Model m = Model::radial(2, 0.1, 0.1, 1.0, 4e-3);
    const TranslatedOperator op = assemble(m, small_grid(2, 64, 0.25), default_theta(4e-3));
    const cd guess(harmonic_levels(m, 1).level(1) * 4e-3, 0.0);
    const ResonanceResult d = find_resonance(op, guess);
    ResonanceOptions it;
    it.solver = LinearSolverKind::Iterative;
    const ResonanceResult i = find_resonance(op, guess, it);
    CHECK(d.eigvec_residual <= 1e-9);
    CHECK(i.eigvec_residual <= 1e-9);
    CHECK(std::abs(d.rho - i.rho) <= 1e-9);
}

TEST_CASE("acceptance rule") {
    ResonanceResult r;
    r.rho = cd(1e-4, -1e-6);
    r.eigvec_residual = 1e-14;
    r.theta_drift = 1e-9;
    std::string why;
    CHECK(accept_sample(r, AcceptanceRule{}, &why));
    CHECK(why.empty());
    r.theta_drift = 1e-7;
    CHECK_FALSE(accept_sample(r, AcceptanceRule{}, &why));
    CHECK(why == "theta drift");
    r.theta_drift = 1e-9;
    r.eigvec_residual = 1e-8;
    CHECK_FALSE(accept_sample(r, AcceptanceRule{}, &why));
    CHECK(why == "residual");
    r.eigvec_residual = 1e-10;
    r.rho = cd(1e-4, -1e-9);
    r.theta_drift = 0.0;
    CHECK_FALSE(accept_sample(r, AcceptanceRule{}, &why));
    CHECK(why == "underflow");
    r.theta_drift = -1.0;
    CHECK_FALSE(accept_sample(r, AcceptanceRule{}));
}

TEST_CASE("grid policy") {
    const Model m1 = Model::radial(1, 0.1, 0.1);
    const GridSpec a = grid_policy(m1, 5e-4);
    const GridSpec b = grid_policy(m1, 2.5e-4);
    CHECK(b.points > a.points);
    CHECK(grid_policy(m1, 1e-5).points == 8192);
    CHECK(grid_policy(m1, 0.1).points == 64);
    const double k = std::sqrt(0.1 + 0.35) / 5e-4;
    CHECK(k * a.spacing() <= 0.25);
    const GridSpec c = grid_policy(Model::radial(2, 0.1, 0.1), 1e-3);
    CHECK(c.points == 288);
    CHECK(c.half_width == 0.2);
    CHECK(boundary_decay(m1, grid_policy(m1, 2.5e-4), 2.5e-4) < 1e-14);
}

TEST_CASE("width scan with cache round trip") {
    const Model m = Model::radial(1, 0.1, 0.1, 1.0, 1e-3);
    ScanOptions opt;
    opt.workers = 2;
    opt.fingerprint = "abc";
    const std::vector<ScanSample> s = width_scan(m, {2e-3, 1e-3, 8e-4}, opt);
    REQUIRE(s.size() == 3);
    for (const ScanSample& x : s) {
        CHECK(x.ok);
        CHECK(x.accepted);
    }
    CHECK(std::abs(s[0].result.rho.imag()) > std::abs(s[1].result.rho.imag()));
    CHECK(std::abs(s[1].result.rho.imag()) > std::abs(s[2].result.rho.imag()));

    std::ostringstream os;
    write_scan_csv(os, s, "abc");
    std::istringstream is(os.str());
    std::string fp;
    const std::vector<ScanSample> back = read_scan_csv(is, &fp);
    CHECK(fp == "abc");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].h == s[i].h);
        CHECK(back[i].result.rho == s[i].result.rho);
        CHECK(back[i].result.eigvec_residual == s[i].result.eigvec_residual);
        CHECK(back[i].grid.points == s[i].grid.points);
        CHECK(back[i].accepted == s[i].accepted);
    }

    // any edit of the body is detected
    std::string text = os.str();
    const std::size_t pos = text.rfind("e-0");
    text[pos - 1] = text[pos - 1] == '1' ? '2' : '1';
    std::istringstream bad(text);
    CHECK_THROWS_AS(read_scan_csv(bad), CacheError);
    std::istringstream junk("# fingerprint=abc\nnot,a,header\n");
    CHECK_THROWS_AS(read_scan_csv(junk), CacheError);

    CHECK_THROWS_AS(width_scan(m, {1e-3, 2e-3}, opt), InputError);
}

TEST_CASE("sample keys depend on every input") {
    const Model m = Model::radial(1, 0.1, 0.1);
    const GridSpec g = grid_policy(m, 1e-3);
    const std::string k = sample_key(m, g, 1e-3, 0.03, 1);
    CHECK(k == sample_key(m, g, 1e-3, 0.03, 1));
    CHECK(k != sample_key(m, g, 1e-3, 0.03, 2));
    CHECK(k != sample_key(m, g, 1e-3, 0.031, 1));
    CHECK(k != sample_key(m, g, 9e-4, 0.03, 1));
    Model m2 = m;
    m2.params.coupling_c = 0.5;
    CHECK(k != sample_key(m2, g, 1e-3, 0.03, 1));
}

}  // TEST_SUITE
