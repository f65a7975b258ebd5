#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace wkblab {

// Evaluation outside the region where a quantity is defined (caustic,
// eta = 0, n < l, Newton failure, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// The metric failed to be positive definite at `point`.
class NotPositiveDefinite : public DomainError {
public:
  NotPositiveDefinite(const std::string& what, Eigen::VectorXd point)
      : DomainError(what), point_(std::move(point)) {}
  const Eigen::VectorXd& point() const { return point_; }

private:
  Eigen::VectorXd point_;
};

// Inputs violating a documented precondition.
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A quadrature would need more nodes than the budget allows.
class ResolutionRefused : public std::runtime_error {
public:
  ResolutionRefused(const std::string& what, double required, double budget)
      : std::runtime_error(what), required_(required), budget_(budget) {}
  double required_nodes() const { return required_; }
  double budget() const { return budget_; }

private:
  double required_;
  double budget_;
};

}  // namespace wkblab
