#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rsgbm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural problems with a model (bad rates, non-conservative generator, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Generator support graph is not strongly connected.
class IrreducibilityError : public ModelError {
public:
    using ModelError::ModelError;
};

/// Qu = v has no solution (v not orthogonal to the stationary distribution).
class SolvabilityError : public Error {
public:
    using Error::Error;
};

/// Input outside the admissible domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A series did not converge within the term budget; carries the certified tail bound.
class TruncationError : public Error {
public:
    TruncationError(const std::string& msg, double tail_bound)
        : Error(msg), tail_bound(tail_bound) {}
    double tail_bound;
};

/// Iterative numerics failed (eigensolve non-convergence, quadrature breakdown, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input document; the message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Aggregate of every semantic violation found while validating a config or model,
/// so a caller sees all problems at once rather than the first.
class ValidationErrors : public Error {
public:
    explicit ValidationErrors(std::vector<std::string> msgs)
        : Error(join(msgs)), messages(std::move(msgs)) {}
    std::vector<std::string> messages;

private:
    static std::string join(const std::vector<std::string>& msgs) {
        std::string out = "validation failed:";
        for (const auto& m : msgs) {
            out += "\n  - ";
            out += m;
        }
        return out;
    }
};

}  // namespace rsgbm
