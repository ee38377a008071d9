#pragma once

#include <stdexcept>
#include <string>

namespace wkb {

/// Invalid configuration: shape mismatch, out-of-range parameter, unmet precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical domain was left, e.g. the analytic radius became negative.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown during a run (CFL refusal, NaN, divergence of an iteration).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace detail
}  // namespace wkb
