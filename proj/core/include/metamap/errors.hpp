#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace metamap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Ill-formed map or family (tiling gaps, non-expanding branch, image outside [0,1]).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Iterative routine failed to reach its tolerance.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A standing structural assumption on the map was found violated.
class HypothesisViolation : public Error {
public:
    using Error::Error;
};

/// The request is valid but falls outside the supported regime.
class UnsupportedRegime : public Error {
public:
    using Error::Error;
};

/// The spectral or hole data is degenerate (complex pair, no surviving mass, no leak).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Scenario loading failure. Carries one message per offending field.
class ScenarioError : public Error {
public:
    explicit ScenarioError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

}  // namespace metamap
