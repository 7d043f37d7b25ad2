#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polyrand/distribution.hpp"
#include "polyrand/estimate.hpp"
#include "polyrand/polynomial.hpp"
#include "polyrand/report.hpp"

namespace polyrand::charfun {

/// e^{-0.027}: sup |L(t)| over |t| >= 8.5 for the Cantor law.
inline const double kCantorCramerBound = std::exp(-0.027);
inline constexpr double kCantorCramerThreshold = 8.5;

/// Monte Carlo estimate of E exp{i t f(S_n + a)}. Coordinates of S_n are
/// i.i.d. copies of `dist`; `a` has the dimension of f. Jackknife standard
/// error over fixed sampling blocks.
ComplexEstimate cf_empirical(const Distribution& dist, const AnyPolynomial& f, int n, std::span<const double> a,
                             double t, std::size_t n_samples, std::uint64_t seed);

/// Same estimator on a whole t grid; every t shares the same draws.
std::vector<ComplexEstimate> cf_empirical_grid(const Distribution& dist, const AnyPolynomial& f, int n,
                                               std::span<const double> a, std::span<const double> t_grid,
                                               std::size_t n_samples, std::uint64_t seed);

/// Number of cosine factors kept by cantor_cf so the dropped tail moves the
/// product by less than tol.
int cantor_truncation(double t, double tol);

/// L(t) = prod_{j>=1} cos(2 pi 3^{-j} t), truncated at cantor_truncation(t, tol).
double cantor_cf(double t, double tol = 1e-14);

/// Grid scan of |L(t)| against `bound`. The argmax is reported as metrics.
EnvelopeReport cantor_cramer_scan(double t_min, double t_max, double step, double tol,
                                  double bound = kCantorCramerBound);

enum class MonomialMethod { closed_form, quadrature, monte_carlo };

/// E exp{i t Z_1 ... Z_k} for i.i.d. standard normal Z_i.
///  closed_form: k <= 2; quadrature: k <= 4 via g_k(t) = E g_{k-1}(t Z);
///  monte_carlo: any k.
ComplexEstimate gaussian_monomial_cf(int k, double t, MonomialMethod method, std::size_t n_samples = 1'000'000,
                                     std::uint64_t seed = 0);

/// statistic(t) = |E exp{i t Z_1...Z_k}| t / ln^{k-2}(2 + t) on t >= 1.
/// Metrics l_k_empirical / L_k_empirical hold the grid min / max.
EnvelopeReport theorem4_envelope(int k, std::span<const double> t_grid);

/// phi_X(T) = integral over [-T, T] of |g_X|.
struct AveragedCFProfile {
  std::vector<double> T;
  std::vector<double> phi;
  double epsilon = 0.0;
  /// log-log slope of phi_X over the top decade of the grid.
  double growth_exponent = 0.0;

  /// phi_X at a grid point (relative match 1e-12); throws if absent.
  double at(double T_value) const;
};

/// Integrates |g_X| using the law's exact CF, or an empirical CF from
/// `empirical_samples` draws when no exact CF is attached (at least 1e5).
AveragedCFProfile phi_profile(const Distribution& dist, std::span<const double> T_grid, double quad_tol = 1e-9,
                              std::size_t empirical_samples = 0, std::uint64_t seed = 0);

/// Every T value (t and b t) that condition5_check will look up.
std::vector<double> condition5_grid(std::span<const double> b_grid, std::span<const double> t_grid);

/// pass at (b, t) iff phi_X(b t) <= b^eps phi(t) (relative slack `rel_slack`
/// absorbs quadrature rounding). Rows are indexed by b t.
EnvelopeReport condition5_check(const AveragedCFProfile& profile, const std::function<double(double)>& phi_model,
                                double epsilon, std::span<const double> b_grid, std::span<const double> t_grid,
                                double rel_slack = 1e-9);

struct DecayModel {
  /// Prefactor; c <= 0 disables the upper bound.
  double c = 0.0;
  double D = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of log y on log x.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// statistic(t) = |g(t)| t^D / c for the MC estimate g of E exp{i t f(S_n + a)}.
/// Points with |g| < 5 SE are flagged inconclusive and left out of the
/// top-decade exponent fit (metrics fitted_slope, fitted_slope_se).
EnvelopeReport decay_envelope(const Distribution& dist, const AnyPolynomial& f, int n, std::span<const double> a,
                              std::span<const double> t_grid, DecayModel model, std::size_t n_samples,
                              std::uint64_t seed);

/// Smallest number of Cantor copies allowed for a given epsilon:
/// ceil(ln(2 / (3^eps - 1)) / 0.027).
int cantor_power_threshold(double epsilon);

}  // namespace polyrand::charfun
