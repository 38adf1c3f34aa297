#pragma once

#include <vector>

#include "phasetunnel/spectral.hpp"

namespace phasetunnel {

struct WidthSample {
    double h = 0.0;
    cd rho{0.0, 0.0};
    double residual = 0.0;  // eigenpair residual of the sample
};

/// Least squares for ln|Im rho| = -2S/h + q ln h + b.
struct WidthFit {
    std::vector<WidthSample> samples;  // samples that entered the fit
    int excluded = 0;                  // dropped by the underflow guard
    double S_fit = 0.0;
    double S_stderr = 0.0;             // NaN with no spare degrees of freedom
    double prefactor_exponent = 0.0;   // q
    double q_stderr = 0.0;             // NaN with no spare degrees of freedom
    double log_f00 = 0.0;              // b
    double residual_rms = 0.0;
    // Fit with q fixed at 3/2.
    double S_constrained = 0.0;
    double log_f00_constrained = 0.0;
    double residual_rms_constrained = 0.0;
};

/// Samples with |Im rho| < underflow_factor * residual are excluded; at
/// least `min_samples` must remain. Throws InputError on too few samples or a
/// rank-deficient design (h range too narrow).
WidthFit fit_width(const std::vector<WidthSample>& samples, int min_samples = 5,
                   double underflow_factor = 100.0);

/// Accepted scan samples as fit input.
std::vector<WidthSample> accepted_samples(const std::vector<ScanSample>& scan);

}  // namespace phasetunnel
