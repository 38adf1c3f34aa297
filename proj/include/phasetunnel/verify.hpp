#pragma once

#include <string>
#include <vector>

#include "phasetunnel/config.hpp"
#include "phasetunnel/transform.hpp"

namespace phasetunnel {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    bool mandatory = true;
    double seconds = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    std::string fingerprint;

    /// True when every mandatory check passed.
    bool passed() const;
    void append(const VerifyReport& other);
    const CheckResult* find(const std::string& name) const;
};

/// Symbols, potential and Hamiltonian flows.
VerifyReport model_flow_battery(const Model& model, unsigned seed = 1);
/// phi2: eikonal residual, gradient consistency, symmetry, monotonicity, well Hessian.
VerifyReport eikonal_battery(const EikonalField& field, unsigned seed = 2);
/// Correspondence pair, broken path and the action (radial oracle when A = I).
VerifyReport action_battery(const EikonalField& field, unsigned seed = 3);
/// Transformed phases: kappa, symbols, phi2~, Gamma, phi1~, psi, z, caustic,
/// outgoing law and positivity along the ray family.
VerifyReport transform_battery(const TransformedPhases& phases, unsigned seed = 4);
/// Weber family for e in {0.5, 1, 2}, k <= 3.
VerifyReport weber_battery(double tol = 1e-10);
/// Width fit on synthetic data, noiseless and with seeded 5% noise.
VerifyReport fit_battery(unsigned seed = 5);
/// Small spectral instances: symmetry, decoupled limit, dense cross-check.
VerifyReport spectral_battery(const Model& model);

/// Every battery above for the configured model.
VerifyReport run_verify(const RunConfig& config);

}  // namespace phasetunnel
