#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dmpk {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coincident coordinates where a repulsion term divides by their difference.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix left the pseudo-unitary group by more than rounding allows.
class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReprojectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The adaptive stepper ran out of halvings. Carries the state it was stuck at.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double s, std::vector<double> state)
      : std::runtime_error(what), s_(s), state_(std::move(state)) {}

  double s() const noexcept { return s_; }
  const std::vector<double>& state() const noexcept { return state_; }

 private:
  double s_;
  std::vector<double> state_;
};

}  // namespace dmpk
