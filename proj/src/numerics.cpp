#include "polyrand/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "polyrand/error.hpp"

namespace polyrand::numerics {

namespace {

GaussRule build_gauss_legendre(std::size_t n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                        static_cast<double>(k);
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidInput("gauss_legendre: need at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(build_gauss_legendre(n));
  return *slot;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                     unsigned max_depth) {
  QuadResult r;
  if (a == b) return r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, max_depth, rel_tol, &r.error,
                                                                           &l1);
  r.converged = std::isfinite(r.value) && r.error <= std::max(rel_tol * l1, 1e-300) * 10.0;
  return r;
}

QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            double rel_tol, unsigned max_depth) {
  QuadResult total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const auto piece = integrate(f, breaks[i], breaks[i + 1], rel_tol, max_depth);
    total.value += piece.value;
    total.error += piece.error;
    total.converged = total.converged && piece.converged;
  }
  return total;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b, std::size_t panels,
                        std::size_t order) {
  const auto& rule = gauss_legendre(order);
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    double s = 0.0;
    for (std::size_t i = 0; i < order; ++i) s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    total += 0.5 * h * s;
  }
  return total;
}

double WynnEpsilon::push(double partial_sum) {
  // diag_ holds the last ascending diagonal of the epsilon table.
  ++count_;
  std::vector<double> next;
  next.reserve(diag_.size() + 1);
  next.push_back(partial_sum);
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    const double prev2 = j == 0 ? 0.0 : diag_[j - 1];
    const double delta = next[j] - diag_[j];
    if (delta == 0.0 || !std::isfinite(delta)) {
      next.push_back(std::numeric_limits<double>::infinity());
      break;
    }
    next.push_back(prev2 + 1.0 / delta);
  }
  diag_ = next;
  // Even columns are estimates; take the highest finite even column.
  double best = partial_sum;
  for (std::size_t j = 0; j < diag_.size(); j += 2)
    if (std::isfinite(diag_[j])) best = diag_[j];
  history_.push_back(best);
  error_ = history_.size() >= 2 ? std::abs(history_.back() - history_[history_.size() - 2])
                                : std::numeric_limits<double>::infinity();
  return best;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace polyrand::numerics
