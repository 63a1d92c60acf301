#pragma once

#include <stdexcept>
#include <string>

namespace chaospde {

/// Bad user input: malformed config, inconsistent data, out-of-range parameters.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition does not hold (divergent series, p <= 1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operands live on incompatible grids.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A chaos coefficient was requested before its prerequisites were solved.
class SequencingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Enumeration or allocation would exceed the configured cap.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Numerical failure during a solve (non-finite values, overflow).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace chaospde
