#pragma once

#include <stdexcept>
#include <string>

namespace fhe {

// Invalid run configuration (bad resolutions, unknown presets, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mathematically inadmissible input (non-positive metric, singular gauge).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (ill-conditioned Gram system, blow-up, non-convergence).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A structural assumption of the theory fails on the given data
// (e.g. the fibrewise kernel dimension jumps over the base).
struct AssumptionError : std::runtime_error {
    explicit AssumptionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fhe
