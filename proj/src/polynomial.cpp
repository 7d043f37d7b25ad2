#include "polyrand/polynomial.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "polyrand/error.hpp"

namespace polyrand {

Polynomial1D::Polynomial1D(std::vector<double> lower) : lower_(std::move(lower)) {
  if (lower_.size() < 2) throw InvalidInput("Polynomial1D: degree must be at least 2");
}

Polynomial1D Polynomial1D::monomial(int degree) {
  if (degree < 2) throw InvalidInput("Polynomial1D: degree must be at least 2");
  return Polynomial1D(std::vector<double>(static_cast<std::size_t>(degree), 0.0));
}

double Polynomial1D::operator()(double x) const {
  double acc = 1.0;
  for (auto it = lower_.rbegin(); it != lower_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

VinogradovPolynomial::VinogradovPolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw InvalidInput("VinogradovPolynomial: need at least one coefficient");
}

double VinogradovPolynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = (acc + *it) * x;
  return acc;
}

double VinogradovPolynomial::phase_mod1(long long x) const {
  long double total = 0.0L;
  long double power = 1.0L;
  for (double a : coeffs_) {
    power *= static_cast<long double>(x);
    const long double term = static_cast<long double>(a) * power;
    total += term - std::floor(term);
  }
  return static_cast<double>(total - std::floor(total));
}

MultiIndexPolynomial::MultiIndexPolynomial(int dimension, std::map<Exponents, double> terms)
    : dimension_(dimension) {
  if (dimension < 1) throw InvalidInput("MultiIndexPolynomial: dimension must be positive");
  for (auto& [exps, coeff] : terms) {
    if (static_cast<int>(exps.size()) != dimension)
      throw InvalidInput("MultiIndexPolynomial: exponent vector length mismatch");
    for (int e : exps)
      if (e < 0) throw InvalidInput("MultiIndexPolynomial: negative exponent");
    const int deg = std::accumulate(exps.begin(), exps.end(), 0);
    if (deg == 0) {
      if (coeff != 0.0) throw InvalidInput("MultiIndexPolynomial: constant term must vanish");
      continue;
    }
    if (coeff == 0.0) continue;
    terms_.emplace(exps, coeff);
  }
  if (terms_.empty()) throw InvalidInput("MultiIndexPolynomial: no nonzero terms");
  for (auto& [exps, coeff] : terms_)
    total_degree_ = std::max(total_degree_, std::accumulate(exps.begin(), exps.end(), 0));
  for (auto& [exps, coeff] : terms_)
    if (std::accumulate(exps.begin(), exps.end(), 0) == total_degree_)
      leading_magnitude_ = std::max(leading_magnitude_, std::abs(coeff));
}

MultiIndexPolynomial MultiIndexPolynomial::product_of_coordinates(int dimension) {
  return MultiIndexPolynomial(dimension, {{Exponents(static_cast<std::size_t>(dimension), 1), 1.0}});
}

MultiIndexPolynomial MultiIndexPolynomial::power_sum(int dimension, int m) {
  std::map<Exponents, double> terms;
  for (int i = 0; i < dimension; ++i) {
    Exponents e(static_cast<std::size_t>(dimension), 0);
    e[static_cast<std::size_t>(i)] = m;
    terms.emplace(std::move(e), 1.0);
  }
  return MultiIndexPolynomial(dimension, std::move(terms));
}

double MultiIndexPolynomial::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dimension_)
    throw InvalidInput("MultiIndexPolynomial: point has dimension " + std::to_string(x.size()) +
                       ", expected " + std::to_string(dimension_));
  double total = 0.0;
  for (auto& [exps, coeff] : terms_) {
    double term = coeff;
    for (std::size_t i = 0; i < exps.size(); ++i)
      for (int p = 0; p < exps[i]; ++p) term *= x[i];
    total += term;
  }
  return total;
}

int dimension(const AnyPolynomial& f) {
  if (auto* p = std::get_if<MultiIndexPolynomial>(&f)) return p->dimension();
  return 1;
}

double eval_poly(const AnyPolynomial& f, std::span<const double> x) {
  if (static_cast<int>(x.size()) != dimension(f))
    throw InvalidInput("eval_poly: point has dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(dimension(f)));
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MultiIndexPolynomial>)
          return p(x);
        else
          return p(x[0]);
      },
      f);
}

}  // namespace polyrand
