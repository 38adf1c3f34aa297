#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "phasetunnel/model.hpp"

namespace phasetunnel {

using SpMat = Eigen::SparseMatrix<cd>;

/// Uniform box grid [-L, L]^n with N points per dimension, Dirichlet walls.
struct GridSpec {
    int n = 1;
    double half_width = 0.35;
    int points = 1024;
    int stencil_order = 4;

    double spacing() const { return 2.0 * half_width / (points - 1); }
    std::size_t unknowns() const;
    void validate() const;
};

/// Unknown ordering: component-interleaved, idx = 2 * (grid index) + component,
/// grid index row-major in (x_1, ..., x_n).
struct TranslatedOperator {
    double theta = 0.0;
    double planck_h = 0.0;
    GridSpec grid;
    SpMat matrix;
};

/// Rough byte count of the assembled matrix; assemble() refuses to exceed
/// `memory_limit_bytes`.
std::size_t assembly_bytes(const GridSpec& grid);

TranslatedOperator assemble(const Model& model, const GridSpec& grid, double theta,
                            std::size_t memory_limit_bytes = std::size_t(4) << 30);

/// 4 max(h ln(1/h), h), capped at 0.2.
double default_theta(double h);

enum class LinearSolverKind { Direct, Iterative };

struct ResonanceOptions {
    double tol = 1e-12;         // relative Ritz residual target
    int krylov_dim = 16;
    int max_restarts = 40;
    int max_shift_retries = 3;
    LinearSolverKind solver = LinearSolverKind::Direct;
    int bicgstab_max_iter = 2000;
    double bicgstab_tol = 1e-13;
};

struct ResonanceResult {
    cd rho{0.0, 0.0};
    double eigvec_residual = 0.0;  // ||(A - rho) v|| / ||v||
    double theta_used = 0.0;
    double theta_drift = -1.0;     // |rho(theta) - rho(1.25 theta)|, -1 when not computed
    int iterations = 0;
    cd sigma_used{0.0, 0.0};
    VecC eigvec;                   // empty unless requested
};

/// Shift-invert Arnoldi around sigma_guess, polished by the complex-symmetric
/// Rayleigh quotient v^T A v / v^T v.
ResonanceResult find_resonance(const TranslatedOperator& op, cd sigma_guess,
                               const ResonanceOptions& opt = {}, bool keep_vector = false);

/// Eigenvalue of the dense matrix nearest to `target` (reference path for small grids).
cd dense_eigenvalue_nearest(const TranslatedOperator& op, cd target);

/// Resonance at theta and 1.25 theta; theta <= 0 selects default_theta(h).
/// The sigma guess defaults to e_level * h.
ResonanceResult compute_resonance(const Model& model, const GridSpec& grid, double theta = 0.0,
                                  std::optional<cd> sigma = std::nullopt, int level = 1,
                                  const ResonanceOptions& opt = {});

struct GridPolicy {
    double n1_half_width = 0.35;
    int n1_max_points = 8192;
    double n2_half_width = 0.2;
    int n2_points = 288;
    int stencil_order = 4;
};

/// Grid used for a given h: for n = 1 the spacing resolves the outgoing
/// wavenumber in the open channel at the wall (k dx <= 0.25, capped);
/// for n = 2 a fixed box.
GridSpec grid_policy(const Model& model, double h, const GridPolicy& policy = {});

/// exp(-phi2(wall) / h) at the nearest wall point of the closed channel.
double boundary_decay(const Model& model, const GridSpec& grid, double h);

struct ScanSample {
    double h = 0.0;
    GridSpec grid;
    ResonanceResult result;
    bool ok = false;        // computation finished
    bool accepted = false;  // passes residual, theta-stability and underflow guards
    std::string note;
};

struct AcceptanceRule {
    double max_residual = 1e-9;
    double drift_fraction = 0.05;
    double drift_floor = 1e-10;
    double underflow_factor = 100.0;
};

bool accept_sample(const ResonanceResult& r, const AcceptanceRule& rule, std::string* why = nullptr);

struct ScanOptions {
    int workers = 1;
    int level = 1;
    std::string cache_path;   // empty: no disk cache
    std::string fingerprint;  // stamped into the cache file
    ResonanceOptions resonance;
    AcceptanceRule rule;
    std::function<GridSpec(const Model&, double)> policy = [](const Model& m, double h) { return grid_policy(m, h); };
};

/// One validated resonance per h; failures are recorded and the scan goes on.
std::vector<ScanSample> width_scan(const Model& model, const std::vector<double>& h_list,
                                   const ScanOptions& opt = {});

/// Stable fingerprint of the quantities a cached sample depends on.
std::string sample_key(const Model& model, const GridSpec& grid, double h, double theta, int level);

void write_scan_csv(std::ostream& os, const std::vector<ScanSample>& samples,
                    const std::string& fingerprint);
/// Parses a scan CSV; throws CacheError on malformed rows or a checksum mismatch.
std::vector<ScanSample> read_scan_csv(std::istream& is, std::string* fingerprint = nullptr);

}  // namespace phasetunnel
