#pragma once

#include <stdexcept>
#include <string>

namespace phasetunnel {

/// Rejected input: parameters outside the documented domain.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its tolerance. `best_residual`
/// carries the smallest residual seen before giving up.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double best_residual = -1.0)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// A cache file failed its integrity check.
class CacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace phasetunnel
