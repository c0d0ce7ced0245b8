#pragma once

#include <stdexcept>
#include <string>

namespace fracinv {

/// Raised when a caller passes a parameter outside its documented range.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Array shapes of two operands do not agree.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A sampled coefficient violates ellipticity, the boundary structure
/// condition, or the lower bound on the source factor.
class AssumptionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sparse factorization or solve failed.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A conjugate direction produced no forward sensitivity.
class DegenerateDirection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point increments stopped decreasing.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fracinv
