#pragma once

#include <stdexcept>
#include <string>

namespace cvarlearn {

/// Argument outside an operation's mathematical domain (NaN sample, infeasible action, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Operation invoked on an object in the wrong state (empty distribution, empty history).
class StateError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// The game or trace lacks a capability the operation needs (exact VaR, equilibrium, ...).
class UnsupportedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Config parse/validation failure. `field()` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

}  // namespace cvarlearn
