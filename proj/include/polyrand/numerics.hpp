#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace polyrand::numerics {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule, cached after first use; safe to call concurrently.
const GaussRule& gauss_legendre(std::size_t n);

/// Adaptive Gauss-Kronrod (21 point) on [a, b]; either limit may be infinite.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10, unsigned max_depth = 20);

/// Adaptive integration over consecutive pieces [b_0, b_1], [b_1, b_2], ...
QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            double rel_tol = 1e-10, unsigned max_depth = 20);

/// Composite Gauss-Legendre: `panels` equal panels with an `order`-point rule.
double integrate_panels(const std::function<double(double)>& f, double a, double b, std::size_t panels,
                        std::size_t order);

/// Wynn's epsilon algorithm over a stream of partial sums.
class WynnEpsilon {
 public:
  /// Adds the next partial sum and returns the current extrapolated limit.
  double push(double partial_sum);
  /// |difference| between the last two extrapolations.
  double error() const { return error_; }
  std::size_t size() const { return count_; }

 private:
  std::vector<double> diag_;
  std::vector<double> history_;
  std::size_t count_ = 0;
  double error_ = 0.0;
};

/// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b);

}  // namespace polyrand::numerics
