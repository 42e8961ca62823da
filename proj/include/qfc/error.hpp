// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qfc {

/// Argument outside an operation's domain (bad band, m = 0, zero totals...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid filter program or scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (p, V, phi) outside the positive-semidefinite region.
class NonPhysicalStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A physical model was asked to do something it cannot represent,
/// e.g. a waveplate stack that is not a pure relative-phase gate.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every start of a least-squares fit failed to converge.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double best_cost, int starts)
      : std::runtime_error(what), best_cost_(best_cost), starts_(starts) {}

  double best_cost() const noexcept { return best_cost_; }
  int starts() const noexcept { return starts_; }

 private:
  double best_cost_;
  int starts_;
};

}  // namespace qfc
