#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrand/distribution.hpp"
#include "polyrand/error.hpp"
#include "polyrand/polynomial.hpp"
#include "polyrand/report.hpp"

namespace polyrand::vinogradov {

/// F = sum_{x=1}^P exp{2 pi i f(x)}.
std::complex<double> weyl_sum(long long P, const VinogradovPolynomial& f);

/// J_k(P): solutions of sum_i (x_i^j - y_i^j) = 0, j = 1..m, 1 <= x_i, y_i <= P.
struct DiophantineCount {
  int P = 0;
  int m = 0;
  int k = 0;
  std::uint64_t count = 0;
};

enum class CountMethod { enumerate, signature_histogram };

/// Work and memory limits for the counting kernels.
inline constexpr double kMaxEnumeratePairs = 1e8;
inline constexpr double kMaxHistogramKeys = 4e7;

CostEstimate jk_cost(int P, int m, int k, CountMethod method);

/// Exact count. enumerate compares all P^{2k} tuple pairs; the histogram
/// method tallies N(v) = #{k-tuples with power-sum vector v} and returns
/// sum_v N(v)^2. Throws Infeasible beyond the limits above.
DiophantineCount jk_count(int P, int m, int k, CountMethod method = CountMethod::signature_histogram);

struct VinogradovConstants {
  double delta = 0.0;
  /// log c_tau; c_tau itself overflows for moderate m, tau.
  double log_c = 0.0;
};

/// Delta(tau) = m(m+1)(1 - (1 - 1/m)^tau)/2 and c_tau = (m tau)^{6 m tau} (2m)^{4m(m+1)tau}.
VinogradovConstants vinogradov_constants(int m, int tau);

/// statistic(P) = log J_k(P) - (2k - Delta) log P - log c_tau with k = m tau;
/// rows also require the diagonal bound J_k(P) >= P^k.
EnvelopeReport verify_theorem7(std::span<const int> P_grid, int m, int tau);

/// alpha_j in [-P^{j-1}, P^{j-1}], j = 1..m, with prefactor P^{-m(m-1)/2}.
struct CoefficientBox {
  int m = 0;
  double P = 1.0;

  double half_width(int j) const;
  double log_volume() const;
  double log_prefactor() const;
};

/// I_k(P) estimate.
struct MeanValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double P = 1.0;
  int m = 0;
  int k = 0;
  std::size_t n_mc = 0;
  /// exact | quadrature | monte_carlo: how E exp{2 pi i f(S)} 1{-P<S<=P} was evaluated.
  std::string inner;
  /// Split-sample estimate of the plug-in bias (monte_carlo inner only).
  std::optional<double> bias_estimate;
  /// False when a deterministic quadrature failed its convergence check.
  bool converged = true;
  /// False when options.target_rel_se was requested and not reached.
  bool precise = true;
};

enum class IkMethod {
  /// Uniform draws over the coefficient box.
  box_plain,
  /// One stratum per sign pattern of (alpha_1..alpha_m), equal allocation.
  box_stratified,
  /// Truncated Cauchy proposal with scale kappa R^{-j} in alpha_j, R the
  /// support radius of S (or P). For continuous S concentrated near alpha = 0.
  importance,
  /// Integer-valued S only: periodicity reduces the box to [0,1]^m, which is
  /// integrated by a tensor Gauss-Legendre rule. Deterministic.
  unit_cell_quadrature,
};

struct IkOptions {
  IkMethod method = IkMethod::box_stratified;
  std::size_t n_mc = 100'000;
  /// Draws of S reused across alpha (common random numbers) when no exact
  /// inner expectation is available.
  std::size_t n_inner = 20'000;
  double importance_scale = 0.5;
  double quadrature_tol = 1e-9;
  /// When set, estimates whose relative SE exceeds it are flagged.
  std::optional<double> target_rel_se;
  std::uint64_t seed = 0;
};

/// Cost of the estimator (alpha draws times inner evaluations).
CostEstimate ik_cost(const Distribution& S, double P, int m, int k, const IkOptions& options);

MeanValueEstimate ik_estimate(const Distribution& S, double P, int m, int k, const IkOptions& options = {});

/// E exp{2 pi i f(S)} 1{-P < S <= P}, exact when S has atoms or a uniform density.
std::optional<std::complex<double>> exact_inner_expectation(const Distribution& S, double P,
                                                            const VinogradovPolynomial& f);

enum class ConcentrationMethod { exact, empirical };

/// sup_a P(a < S <= a + 1). exact needs atoms or an attached exact value;
/// empirical uses a sliding window over n sorted draws.
double concentration_sup(const Distribution& S, ConcentrationMethod method, std::size_t n = 0,
                         std::uint64_t seed = 0);

/// The law of S may depend on P (e.g. uniform on {1..P}).
using LawFamily = std::function<Distribution(double P)>;

/// Ratio I_k / (P^{2k - Delta} Q^{2k}), k = m tau, Q = concentration_sup.
/// pass iff finite and at most 10 times its value at the smallest P.
EnvelopeReport verify_theorem8(const LawFamily& S, std::span<const double> P_grid, int m, int tau,
                               const IkOptions& options);

/// I_k(P) <= 2^{5m^2+m} P^{-m^2} / (1 - m/(2b)) for S uniform on [-P, P],
/// k = b m, P >= 32. pass iff estimate + 3 SE <= bound.
EnvelopeReport verify_theorem9(double P, int m, int b, const IkOptions& options);

/// log of the bound checked by verify_theorem9.
double theorem9_log_bound(double P, int m, int b);

/// Ratio I_k / (P^{(3k-1)/2} Q^{2k}) for 1 <= k <= m, same pass rule as verify_theorem8.
EnvelopeReport verify_theorem10(const LawFamily& S, std::span<const double> P_grid, int m, int k,
                                const IkOptions& options);

/// For S uniform on {1..P}: I_k from the unit-cell quadrature against
/// 2^m P^{-2k} J_k(P); pass iff relative gap <= 1e-6.
EnvelopeReport remark3_check(int P, int m, int k);

/// J_k(P) as the integral of |F|^{2k} over [0,1]^m (tensor Gauss rule).
double jk_by_integral(int P, int m, int k, bool* converged = nullptr);

}  // namespace polyrand::vinogradov
