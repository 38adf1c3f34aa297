#pragma once

#include <string>
#include <vector>

#include "phasetunnel/model.hpp"

namespace phasetunnel {

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fingerprint(const std::string& text);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double v);
double parse_double_strict(const std::string& text);

/// Run configuration read from `key = value` lines (`#` starts a comment).
///
/// Keys:
///   n, mu, tau, c, h, delta, family (radial | anisotropic), A (n*n entries, row-major)
///   grid.order, grid.n1.L, grid.n1.max_points, grid.n2.L, grid.n2.points
///   scan.h (comma list, descending), scan.theta (0 = default policy), scan.level, scan.workers
///   tol.eikonal, tol.pair, tol.resonance, tol.weber, tol.residual, tol.drift
///   output.file, output.cache
struct RunConfig {
    ModelParams params;
    PotentialModel potential = PotentialModel::radial(2);

    int stencil_order = 4;
    double n1_half_width = 0.35;
    int n1_max_points = 8192;
    double n2_half_width = 0.2;
    int n2_points = 288;

    std::vector<double> h_list;
    double theta = 0.0;
    int level = 1;
    int workers = 1;

    double tol_eikonal = 1e-8;
    double tol_pair = 1e-10;
    double tol_resonance = 1e-12;
    double tol_weber = 1e-10;
    double tol_residual = 1e-9;
    double tol_drift = 0.05;

    std::string output_file;
    std::string cache_file;

    Model model() const { return {params, potential}; }

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    /// Canonical form: fixed key order, shortest round-trip numbers.
    std::string serialize() const;
    std::string fingerprint() const;
    void validate() const;

    /// Equality of canonical forms.
    bool operator==(const RunConfig& o) const { return serialize() == o.serialize(); }
};

}  // namespace phasetunnel
