#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochcbf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad step sizes, out-of-range probabilities,
/// malformed scenario documents. Maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Singular measurement covariance or other estimator misconfiguration.
class EstimatorConfigError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Shapes of vectors/matrices handed to an operation disagree.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The Euler-Maruyama state left the finite region (non-finite or
/// ||x||_inf above the blow-up threshold).
class IntegrationBlowup : public Error {
public:
    IntegrationBlowup(std::size_t step, const std::string& what)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A reciprocal barrier was evaluated at h(x) <= 0.
class BoundaryError : public Error {
public:
    using Error::Error;
};

/// No l <= n-1 with a^T F^l G != 0.
class NoRelativeDegree : public Error {
public:
    using Error::Error;
};

/// No closed-form shrink amount exists for the requested safety function.
class UnsupportedSafetyFunction : public Error {
public:
    using Error::Error;
};

/// A constraint builder was called without a field its mode requires.
class MissingContext : public Error {
public:
    using Error::Error;
};

}  // namespace stochcbf
