#pragma once

#include <stdexcept>
#include <string>

namespace robreg {

/// Argument outside the mathematical domain of a function (e.g. log_gamma(0)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid hyperparameter or configuration value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation requires a tail class the density does not have.
class TailClassError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical procedure failed (factorization, non-finite target, quadrature).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace robreg
