#include "phasetunnel/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <locale>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "phasetunnel/banded_lu.hpp"
#include "phasetunnel/config.hpp"
#include "phasetunnel/errors.hpp"

namespace phasetunnel {

std::size_t GridSpec::unknowns() const {
    std::size_t m = 2;
    for (int d = 0; d < n; ++d) m *= static_cast<std::size_t>(points);
    return m;
}

void GridSpec::validate() const {
    if (n != 1 && n != 2) throw InputError("grid: n must be 1 or 2");
    if (points < 64) throw InputError("grid: at least 64 points per dimension");
    if (!(half_width > 0.0)) throw InputError("grid: half width must be positive");
    if (stencil_order != 2 && stencil_order != 4) throw InputError("grid: stencil order must be 2 or 4");
}

std::size_t assembly_bytes(const GridSpec& grid) {
    const std::size_t per_row = 2 + static_cast<std::size_t>(grid.n) * (grid.stencil_order == 4 ? 4 : 2);
    // value + inner index per entry, plus triplet staging during assembly
    return grid.unknowns() * per_row * (sizeof(cd) + sizeof(int)) * 2;
}

double default_theta(double h) { return std::min(0.2, 4.0 * std::max(h * std::log(1.0 / h), h)); }

TranslatedOperator assemble(const Model& model, const GridSpec& grid, double theta,
                            std::size_t memory_limit_bytes) {
    model.validate();
    grid.validate();
    if (grid.n != model.params.n) throw InputError("assemble: grid and model dimensions differ");
    if (!(theta > 0.0) || theta > 0.5) throw InputError("assemble: theta must lie in (0, 0.5]");
    const std::size_t need = assembly_bytes(grid);
    if (need > memory_limit_bytes)
        throw InputError("assemble: memory bound exceeded, " + std::to_string(need) + " bytes required");

    const int n = grid.n, N = grid.points;
    const double d = grid.spacing(), L = grid.half_width;
    const double h = model.params.planck_h, mu = model.params.mu, tau = model.params.tau;
    const double kin = h * h / (d * d);
    // Off-diagonal stencil weights of -h^2 d^2/dx^2 at offsets 1, 2.
    std::vector<double> off;
    double centre;
    if (grid.stencil_order == 4) {
        off = {-16.0 / 12.0 * kin, 1.0 / 12.0 * kin};
        centre = 30.0 / 12.0 * kin;
    } else {
        off = {-kin};
        centre = 2.0 * kin;
    }
    const int reach = static_cast<int>(off.size());

    const std::size_t npts = grid.unknowns() / 2;
    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(grid.unknowns() * (2 + 2 * reach * n));
    const cd offc(h * model.params.coupling_c, 0.0);
    std::vector<int> idx(n);
    for (std::size_t p = 0; p < npts; ++p) {
        std::size_t rest = p;
        for (int k = n - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rest % N);
            rest /= N;
        }
        VecC x(n);
        for (int k = 0; k < n; ++k) x(k) = -L + d * idx[k];
        x(n - 1) -= cd(0.0, theta);
        const int r0 = static_cast<int>(2 * p), r1 = r0 + 1;
        const cd diag_kin = centre * n;
        trip.emplace_back(r0, r0, diag_kin + x(n - 1) - mu);
        trip.emplace_back(r1, r1, diag_kin + tau * v2_eval(model.potential, x));
        if (offc != cd(0.0, 0.0)) {
            trip.emplace_back(r0, r1, offc);
            trip.emplace_back(r1, r0, offc);
        }
        std::size_t stride = 1;
        for (int k = n - 1; k >= 0; --k) {
            for (int o = 1; o <= reach; ++o) {
                for (int sgn : {-1, 1}) {
                    const int j = idx[k] + sgn * o;
                    if (j < 0 || j >= N) continue;
                    const std::size_t q = sgn > 0 ? p + o * stride : p - o * stride;
                    for (int c = 0; c < 2; ++c)
                        trip.emplace_back(static_cast<int>(2 * p + c), static_cast<int>(2 * q + c), off[o - 1]);
                }
            }
            stride *= N;
        }
    }
    TranslatedOperator op;
    op.theta = theta;
    op.planck_h = h;
    op.grid = grid;
    op.matrix.resize(static_cast<Eigen::Index>(grid.unknowns()), static_cast<Eigen::Index>(grid.unknowns()));
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
}

namespace {

// Applies (A - sigma)^{-1}.
class ShiftInvert {
public:
    virtual ~ShiftInvert() = default;
    virtual void solve(const VecC& b, VecC& x) = 0;
};

class BandedShiftInvert : public ShiftInvert {
public:
    explicit BandedShiftInvert(const SpMat& m) {
        const auto [kl, ku] = BandedLU::bandwidths(m);
        lu_.factor(m, kl, ku);
        if (lu_.singular()) throw NumericalError("banded LU: singular shifted matrix");
    }
    void solve(const VecC& b, VecC& x) override {
        x = b;
        lu_.solve(x);
    }

private:
    BandedLU lu_;
};

// Nested dissection of the 2D grid: halves, then the separator (two grid
// lines wide, the stencil reach) last. Both components of a point stay adjacent.
void dissect(int i0, int i1, int j0, int j1, int N, std::vector<int>& order) {
    const int ni = i1 - i0, nj = j1 - j0;
    if (ni <= 0 || nj <= 0) return;
    if (ni * nj <= 64 || (ni <= 4 && nj <= 4)) {
        for (int i = i0; i < i1; ++i)
            for (int j = j0; j < j1; ++j) order.push_back(i * N + j);
        return;
    }
    if (ni >= nj) {
        const int m = i0 + ni / 2 - 1;
        dissect(i0, m, j0, j1, N, order);
        dissect(m + 2, i1, j0, j1, N, order);
        for (int i = m; i < std::min(m + 2, i1); ++i)
            for (int j = j0; j < j1; ++j) order.push_back(i * N + j);
    } else {
        const int m = j0 + nj / 2 - 1;
        dissect(i0, i1, j0, m, N, order);
        dissect(i0, i1, m + 2, j1, N, order);
        for (int i = i0; i < i1; ++i)
            for (int j = m; j < std::min(m + 2, j1); ++j) order.push_back(i * N + j);
    }
}

class SparseShiftInvert : public ShiftInvert {
public:
    SparseShiftInvert(const SpMat& m, const GridSpec& grid) {
        std::vector<int> pts;
        pts.reserve(grid.unknowns() / 2);
        if (grid.n == 2) {
            dissect(0, grid.points, 0, grid.points, grid.points, pts);
        } else {
            for (int i = 0; i < grid.points; ++i) pts.push_back(i);
        }
        // perm maps old index -> new index
        perm_.resize(static_cast<Eigen::Index>(grid.unknowns()));
        for (std::size_t k = 0; k < pts.size(); ++k)
            for (int c = 0; c < 2; ++c) perm_.indices()(2 * pts[k] + c) = static_cast<int>(2 * k + c);
        SpMat pm;
        pm = m.twistedBy(perm_);
        lu_.setPivotThreshold(1e-3);
        lu_.analyzePattern(pm);
        lu_.factorize(pm);
        if (lu_.info() != Eigen::Success) throw NumericalError("sparse LU failed: " + lu_.lastErrorMessage());
    }
    void solve(const VecC& b, VecC& x) override {
        const VecC pb = perm_ * b;
        const VecC px = lu_.solve(pb);
        x = perm_.inverse() * px;
    }

private:
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
    Eigen::SparseLU<SpMat, Eigen::NaturalOrdering<int>> lu_;
};

class IterativeShiftInvert : public ShiftInvert {
public:
    // BiCGSTAB keeps a reference to its matrix, so the shifted matrix is owned here.
    IterativeShiftInvert(SpMat m, const ResonanceOptions& opt) : m_(std::move(m)) {
        solver_.preconditioner().setDroptol(1e-6);
        solver_.preconditioner().setFillfactor(20);
        solver_.setMaxIterations(opt.bicgstab_max_iter);
        solver_.setTolerance(opt.bicgstab_tol);
        solver_.compute(m_);
        if (solver_.info() != Eigen::Success) throw NumericalError("ILUT preconditioner failed");
    }
    void solve(const VecC& b, VecC& x) override {
        x = solver_.solve(b);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("BiCGSTAB did not converge", solver_.error());
    }

private:
    SpMat m_;
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<cd>> solver_;
};

std::unique_ptr<ShiftInvert> make_solver(const TranslatedOperator& op, cd sigma,
                                         const ResonanceOptions& opt) {
    SpMat shifted = op.matrix;
    for (Eigen::Index k = 0; k < shifted.rows(); ++k) shifted.coeffRef(k, k) -= sigma;
    if (opt.solver == LinearSolverKind::Iterative)
        return std::make_unique<IterativeShiftInvert>(std::move(shifted), opt);
    if (op.grid.n == 1) return std::make_unique<BandedShiftInvert>(shifted);
    return std::make_unique<SparseShiftInvert>(shifted, op.grid);
}

cd bilinear(const VecC& a, const VecC& b) { return (a.transpose() * b)(0); }

}  // namespace

ResonanceResult find_resonance(const TranslatedOperator& op, cd sigma_guess,
                               const ResonanceOptions& opt, bool keep_vector) {
    const SpMat& a = op.matrix;
    const Eigen::Index dim = a.rows();
    const int m = std::max(4, std::min<int>(opt.krylov_dim, static_cast<int>(dim) - 1));
    double a_norm = 0.0;
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        double col = 0.0;
        for (SpMat::InnerIterator it(a, c); it; ++it) col += std::abs(it.value());
        a_norm = std::max(a_norm, col);
    }
    const double target = opt.tol * std::max(1.0, a_norm);

    cd sigma = sigma_guess;
    std::unique_ptr<ShiftInvert> solver;
    for (int attempt = 0;; ++attempt) {
        try {
            solver = make_solver(op, sigma, opt);
            break;
        } catch (const NumericalError&) {
            if (attempt >= opt.max_shift_retries) throw;
            sigma += cd(1.0, 1.0) * 1e-3 * std::max(op.planck_h, 1e-12);
        }
    }

    std::mt19937_64 rng(20240917);
    std::normal_distribution<double> g;
    VecC v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = cd(g(rng), g(rng));
    v.normalize();

    ResonanceResult best;
    best.eigvec_residual = std::numeric_limits<double>::infinity();
    VecC best_vec;
    MatC basis(dim, m + 1);
    MatC hess = MatC::Zero(m + 1, m);
    VecC w(dim);
    int total = 0;
    for (int restart = 0; restart < opt.max_restarts; ++restart) {
        hess.setZero();
        basis.col(0) = v;
        int k_used = m;
        for (int j = 0; j < m; ++j) {
            solver->solve(basis.col(j), w);
            ++total;
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) {
                    const cd c = basis.col(i).dot(w);
                    hess(i, j) += c;
                    w -= c * basis.col(i);
                }
            const double nw = w.norm();
            hess(j + 1, j) = nw;
            if (nw < 1e-14 * std::abs(hess(j, j)) || nw == 0.0) {
                k_used = j + 1;
                break;
            }
            basis.col(j + 1) = w / nw;
        }
        Eigen::ComplexEigenSolver<MatC> es(hess.topLeftCorner(k_used, k_used));
        Eigen::Index pick = 0;
        es.eigenvalues().cwiseAbs().maxCoeff(&pick);
        const cd ritz = es.eigenvalues()(pick);
        VecC x = basis.leftCols(k_used) * es.eigenvectors().col(pick);
        x.normalize();
        const VecC ax = a * x;
        cd lambda = sigma + 1.0 / ritz;
        const cd rq = bilinear(x, ax) / bilinear(x, x);
        const double r_ritz = (ax - lambda * x).norm();
        const double r_rq = (ax - rq * x).norm();
        if (r_rq < r_ritz) lambda = rq;
        const double r = std::min(r_ritz, r_rq);
        if (r < best.eigvec_residual) {
            best.rho = lambda;
            best.eigvec_residual = r;
            best_vec = x;
        }
        if (r <= target) break;
        v = x;
    }
    best.iterations = total;
    best.sigma_used = sigma;
    best.theta_used = op.theta;
    if (keep_vector) best.eigvec = best_vec;
    if (!(best.eigvec_residual <= std::max(target, 1e-9)))
        throw NumericalError("shift-invert Arnoldi did not converge", best.eigvec_residual);
    return best;
}

cd dense_eigenvalue_nearest(const TranslatedOperator& op, cd target) {
    if (op.matrix.rows() > 4096) throw InputError("dense reference limited to 4096 unknowns");
    const MatC dense = MatC(op.matrix);
    Eigen::ComplexEigenSolver<MatC> es(dense, false);
    Eigen::Index pick = 0;
    (es.eigenvalues().array() - target).abs().minCoeff(&pick);
    return es.eigenvalues()(pick);
}

ResonanceResult compute_resonance(const Model& model, const GridSpec& grid, double theta,
                                  std::optional<cd> sigma, int level, const ResonanceOptions& opt) {
    const double h = model.params.planck_h;
    if (theta <= 0.0) theta = default_theta(h);
    const cd guess = sigma.value_or(cd(harmonic_levels(model, level).level(level) * h, 0.0));
    ResonanceResult r = find_resonance(assemble(model, grid, theta), guess, opt);
    const ResonanceResult r2 = find_resonance(assemble(model, grid, 1.25 * theta), r.rho, opt);
    r.theta_drift = std::abs(r.rho - r2.rho);
    r.eigvec_residual = std::max(r.eigvec_residual, r2.eigvec_residual);
    return r;
}

GridSpec grid_policy(const Model& model, double h, const GridPolicy& policy) {
    GridSpec g;
    g.n = model.params.n;
    g.stencil_order = policy.stencil_order;
    if (g.n == 1) {
        g.half_width = policy.n1_half_width;
        const double k_wall = std::sqrt(model.params.mu + g.half_width) / h;
        const double dx = 0.25 / k_wall;
        g.points = std::clamp(static_cast<int>(std::ceil(2.0 * g.half_width / dx)) + 1, 64,
                              std::max(64, policy.n1_max_points));
    } else {
        g.half_width = policy.n2_half_width;
        g.points = policy.n2_points;
    }
    return g;
}

double boundary_decay(const Model& model, const GridSpec& grid, double h) {
    const double tau = model.params.tau;
    const MatR& a = model.potential.aniso_matrix;
    double d_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.n; ++k) {
        const double akk = a(k, k);
        const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) { return std::sqrt(-std::expm1(-0.5 * akk * s * s)); }, 0.0,
            grid.half_width, 10, 1e-12);
        d_min = std::min(d_min, std::sqrt(tau) * integral);
    }
    return std::exp(-d_min / h);
}

bool accept_sample(const ResonanceResult& r, const AcceptanceRule& rule, std::string* why) {
    std::string reason;
    const double im = std::abs(r.rho.imag());
    if (!(r.eigvec_residual <= rule.max_residual)) reason = "residual";
    else if (r.theta_drift < 0.0) reason = "theta drift not computed";
    else if (r.theta_drift > std::max(rule.drift_floor, rule.drift_fraction * im)) reason = "theta drift";
    else if (im < rule.underflow_factor * r.eigvec_residual) reason = "underflow";
    else if (!(r.rho.imag() < 0.0)) reason = "Im rho not negative";
    if (why) *why = reason;
    return reason.empty();
}

std::string sample_key(const Model& model, const GridSpec& grid, double h, double theta, int level) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << "n=" << model.params.n << ";mu=" << model.params.mu
       << ";tau=" << model.params.tau << ";c=" << model.params.coupling_c << ";A=";
    const MatR& a = model.potential.aniso_matrix;
    for (Eigen::Index i = 0; i < a.size(); ++i) os << a.data()[i] << ",";
    os << ";L=" << grid.half_width << ";N=" << grid.points << ";order=" << grid.stencil_order
       << ";h=" << h << ";theta=" << theta << ";level=" << level;
    return fingerprint(os.str());
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw CacheError("scan cache: malformed number '" + s + "'");
    return v;
}

}  // namespace

void write_scan_csv(std::ostream& os, const std::vector<ScanSample>& samples,
                    const std::string& fp) {
    std::ostringstream body;
    body.imbue(std::locale::classic());
    body << std::setprecision(17);
    body << "h,theta,N,L,re_rho,im_rho,residual,theta_drift,accepted,n,key\n";
    for (const ScanSample& s : samples) {
        if (!s.ok) continue;
        body << s.h << "," << s.result.theta_used << "," << s.grid.points << "," << s.grid.half_width
             << "," << s.result.rho.real() << "," << s.result.rho.imag() << ","
             << s.result.eigvec_residual << "," << s.result.theta_drift << ","
             << (s.accepted ? 1 : 0) << "," << s.grid.n << "," << s.note << "\n";
    }
    const std::string text = body.str();
    os << "# fingerprint=" << fp << "\n# checksum=" << fingerprint(text) << "\n" << text;
}

std::vector<ScanSample> read_scan_csv(std::istream& is, std::string* fp) {
    std::vector<ScanSample> out;
    std::string line, body, checksum;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# fingerprint=", 0) == 0) {
            if (fp) *fp = line.substr(14);
            continue;
        }
        if (line.rfind("# checksum=", 0) == 0) {
            checksum = line.substr(11);
            continue;
        }
        if (line[0] == '#') continue;
        body += line + "\n";
        if (!header) {
            if (line.rfind("h,theta,N,L,re_rho,im_rho", 0) != 0)
                throw CacheError("scan cache: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 11) throw CacheError("scan cache: wrong column count");
        ScanSample s;
        s.h = parse_double(f[0]);
        s.result.theta_used = parse_double(f[1]);
        s.grid.points = static_cast<int>(parse_double(f[2]));
        s.grid.half_width = parse_double(f[3]);
        s.result.rho = cd(parse_double(f[4]), parse_double(f[5]));
        s.result.eigvec_residual = parse_double(f[6]);
        s.result.theta_drift = parse_double(f[7]);
        s.accepted = parse_double(f[8]) != 0.0;
        s.grid.n = static_cast<int>(parse_double(f[9]));
        s.note = f[10];
        s.ok = true;
        out.push_back(std::move(s));
    }
    if (!checksum.empty() && checksum != fingerprint(body))
        throw CacheError("scan cache: checksum mismatch, file is corrupted");
    return out;
}

std::vector<ScanSample> width_scan(const Model& model, const std::vector<double>& h_list,
                                   const ScanOptions& opt) {
    for (std::size_t i = 1; i < h_list.size(); ++i)
        if (!(h_list[i] < h_list[i - 1])) throw InputError("width_scan: h_list must be descending");
    if (model.params.coupling_c == 0.0) throw InputError("width_scan: coupling must be non-zero");

    std::map<std::string, ScanSample> cached;
    if (!opt.cache_path.empty()) {
        std::ifstream in(opt.cache_path);
        if (in) {
            for (ScanSample& s : read_scan_csv(in)) cached[s.note] = s;
        }
    }

    std::vector<ScanSample> out(h_list.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next++; i < h_list.size(); i = next++) {
            ScanSample& s = out[i];
            s.h = h_list[i];
            Model m = model;
            m.params.planck_h = s.h;
            s.grid = opt.policy(m, s.h);
            const double theta = default_theta(s.h);
            const std::string key = sample_key(m, s.grid, s.h, theta, opt.level);
            const auto hit = cached.find(key);
            if (hit != cached.end()) {
                s = hit->second;
                s.accepted = accept_sample(s.result, opt.rule);
                continue;
            }
            try {
                s.result = compute_resonance(m, s.grid, theta, std::nullopt, opt.level, opt.resonance);
                s.ok = true;
                std::string why;
                s.accepted = accept_sample(s.result, opt.rule, &why);
            } catch (const std::exception& e) {
                s.ok = false;
                s.accepted = false;
            }
            s.note = key;
        }
    };
    const int workers = std::max(1, opt.workers);
    std::vector<std::thread> pool;
    for (int k = 1; k < workers; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    if (!opt.cache_path.empty()) {
        for (const ScanSample& s : out)
            if (s.ok) cached[s.note] = s;
        std::vector<ScanSample> all;
        for (auto& [k, s] : cached) all.push_back(s);
        std::sort(all.begin(), all.end(), [](const ScanSample& a, const ScanSample& b) { return a.h > b.h; });
        std::ofstream os(opt.cache_path);
        if (!os) throw InputError("width_scan: cannot write cache " + opt.cache_path);
        write_scan_csv(os, all, opt.fingerprint);
    }
    return out;
}

}  // namespace phasetunnel
