#pragma once

#include <stdexcept>
#include <string>

namespace polyrand {

/// Raised when an operation's preconditions are violated.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Predicted cost of a heavy kernel (exact counting, Monte Carlo).
struct CostEstimate {
  double operations = 0.0;
  double bytes = 0.0;
  double seconds = 0.0;
  bool feasible = true;
  std::string detail;
};

/// Raised when a request would exceed the configured work or memory limits.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(const std::string& what, CostEstimate cost)
      : std::runtime_error(what), cost_(std::move(cost)) {}
  const CostEstimate& cost() const noexcept { return cost_; }

 private:
  CostEstimate cost_;
};

}  // namespace polyrand
