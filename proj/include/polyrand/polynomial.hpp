#pragma once

#include <map>
#include <span>
#include <variant>
#include <vector>

namespace polyrand {

/// Monic polynomial x^m + a_{m-1} x^{m-1} + ... + a_0 with m >= 2.
class Polynomial1D {
 public:
  /// `lower` holds a_0 ... a_{m-1}; its length is the degree.
  explicit Polynomial1D(std::vector<double> lower);
  static Polynomial1D monomial(int degree);

  int degree() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower_coeffs() const { return lower_; }
  double operator()(double x) const;

 private:
  std::vector<double> lower_;
};

/// a_m x^m + ... + a_1 x, no constant term. Used for Weyl sums and I_k(P).
class VinogradovPolynomial {
 public:
  /// `coeffs` holds a_1 ... a_m.
  explicit VinogradovPolynomial(std::vector<double> coeffs);

  int degree() const { return static_cast<int>(coeffs_.size()); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator()(double x) const;
  /// f(x) mod 1 for integer x, computed term by term in extended precision.
  double phase_mod1(long long x) const;

 private:
  std::vector<double> coeffs_;
};

/// Sum of alpha(m_1..m_k) x_1^{m_1} ... x_k^{m_k} with alpha(0,...,0) = 0.
class MultiIndexPolynomial {
 public:
  using Exponents = std::vector<int>;
  MultiIndexPolynomial(int dimension, std::map<Exponents, double> terms);
  /// x_1 x_2 ... x_k
  static MultiIndexPolynomial product_of_coordinates(int dimension);
  /// x_1^m + ... + x_k^m
  static MultiIndexPolynomial power_sum(int dimension, int m);

  int dimension() const { return dimension_; }
  /// M: the largest total degree carrying a nonzero coefficient.
  int total_degree() const { return total_degree_; }
  /// Largest |alpha| among terms of total degree M.
  double leading_magnitude() const { return leading_magnitude_; }
  const std::map<Exponents, double>& terms() const { return terms_; }
  double operator()(std::span<const double> x) const;

 private:
  int dimension_;
  std::map<Exponents, double> terms_;
  int total_degree_ = 0;
  double leading_magnitude_ = 0.0;
};

using AnyPolynomial = std::variant<Polynomial1D, VinogradovPolynomial, MultiIndexPolynomial>;

int dimension(const AnyPolynomial& f);

/// Exact value of f at x; 1-D polynomials use Horner nesting.
double eval_poly(const AnyPolynomial& f, std::span<const double> x);

}  // namespace polyrand
