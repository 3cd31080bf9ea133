#ifndef VBINV_ERRORS_HPP
#define VBINV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vbinv {

// Invalid parameter values (non-positive shapes, rates out of range, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Mismatched or unusable dimensions.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An SPD factorization failed (indefinite or singular system).
struct FactorizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A forward PDE solve or an iteration could not be completed.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unusable experiment or benchmark configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vbinv

#endif
