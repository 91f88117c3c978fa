#pragma once

#include <stdexcept>
#include <string>

namespace shallowiv {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Option price that no nonnegative total volatility can reproduce.
class UnattainablePriceError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Logistic-beta term structure violates its admissibility conditions.
class ModelInvalidError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite value surfaced during network evaluation or training.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a shape or grid contract.
class ContractViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Malformed input file or config.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace shallowiv
