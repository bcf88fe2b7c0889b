#pragma once

#include <stdexcept>
#include <string>

namespace hpbo {

/// Caller violated a precondition (empty input, exhausted budget, bad transition).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Shapes or names that do not line up (dimension mismatch, arm/space mismatch).
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value outside the domain of an operation (e.g. a unit-cube coordinate > 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Linear algebra or optimizer breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hpbo
