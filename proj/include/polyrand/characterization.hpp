#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrand/distribution.hpp"
#include "polyrand/report.hpp"

namespace polyrand::characterization {

/// Q(x) = sum_{i,j} a_ij x_i x_j with a symmetric, nonzero A and n >= 2.
class SymmetricQuadraticForm {
 public:
  explicit SymmetricQuadraticForm(std::vector<std::vector<double>> A);
  /// [[a11, a12, ...], ...]
  static SymmetricQuadraticForm from_json(const std::string& text);
  /// One row per line, comma separated.
  static SymmetricQuadraticForm from_csv(const std::string& text);

  int n() const { return static_cast<int>(a_.size()); }
  double a(int i, int j) const { return a_[i][j]; }
  const std::vector<std::vector<double>>& matrix() const { return a_; }
  bool integer_entries() const;
  double operator()(std::span<const double> x) const;

 private:
  std::vector<std::vector<double>> a_;
};

enum class Case { case1, case2_1, case2_2_1, case2_2_2, case2_3, indeterminate };

/// "1", "2.1", "2.2.1", "2.2.2", "2.3", "indeterminate"
std::string to_string(Case c);

struct CaseLabel {
  Case label = Case::indeterminate;
  double trace = 0.0;
  /// sum_i a_ii^{2k+1} / max_i |a_ii|^{2k+1}, k = 0..K.
  std::vector<double> odd_power_sums;
  double offdiag_max = 0.0;
  /// Smallest k with a vanishing odd-power sum, if any.
  std::optional<int> first_vanishing_k;
  /// True when integer entries allowed exact evaluation.
  bool exact = false;
};

/// Relative magnitudes below kZeroRel count as zero; those in
/// (kZeroRel, kAmbiguousRel] make the label indeterminate.
inline constexpr double kZeroRel = 1e-12;
inline constexpr double kAmbiguousRel = 1e-8;

CaseLabel classify(const SymmetricQuadraticForm& Q, int K = 50);

/// Moments alpha_1, alpha_2, ... (values[j-1] = alpha_j).
struct MomentSequence {
  std::vector<double> values;
  bool symmetric = false;

  std::size_t order() const { return values.size(); }
  double alpha(std::size_t j) const;
  /// alpha_{2n} >= 0 for the available even moments.
  bool even_nonnegative() const;
  /// Leading principal minors of the Hankel matrix (alpha_{i+j}) are
  /// positive, after rescaling by sqrt(alpha_2).
  bool hankel_positive() const;

  static MomentSequence standard_normal(std::size_t order);
  /// Density (1/4) exp(-|x|^{1/2}): alpha_{2n} = (4n+1)!.
  static MomentSequence root_exponential(std::size_t order);
  /// Symmetric sequence from alpha_2, alpha_4, ...
  static MomentSequence symmetric_from_even(std::vector<double> even);
};

struct QuadMoments {
  MomentSequence moments;
  /// True when rational arithmetic was used throughout.
  bool exact = false;
};

/// E[Q^j], j = 1..N, by symbolic expansion of (sum a_pq Z_p Z_q)^j with
/// independent symmetric Z_p. Needs z_moments up to order 2N.
QuadMoments quad_moments(const SymmetricQuadraticForm& Q, const MomentSequence& z_moments, int N);

struct CarlemanDiagnostic {
  /// alpha_{2n}^{-1/(2n)}, n = 1..
  std::vector<double> terms;
  std::vector<double> partial_sums;
  /// Fitted exponent s in terms ~ n^s over the upper half of the window.
  double tail_exponent = 0.0;
  /// divergent | convergent | borderline; a trend only, never a proof.
  std::string trend;
  /// alpha_{2n}^{1/(2n)} / (2n): bounded for an analytic characteristic function.
  std::vector<double> analytic_ratio;
  /// bounded | unbounded | borderline
  std::string analytic_trend;
};

CarlemanDiagnostic carleman_diagnostic(const MomentSequence& moments);
/// Same diagnostic from log alpha_{2n}, n = 1.., for moments that overflow.
CarlemanDiagnostic carleman_diagnostic_log(std::span<const double> log_even_moments);

/// X = zeta (Z^2 + c)^{1/2} with Z ~ base and an independent fair sign zeta.
Distribution counterexample_sampler(const Distribution& base, double c);

/// Paired draws (Z_i, X_i) from one stream: X_i = zeta_i (Z_i^2 + c)^{1/2}.
struct CounterexamplePairs {
  std::vector<double> z;
  std::vector<double> x;
};
CounterexamplePairs counterexample_pairs(const Distribution& base, double c, std::size_t n, std::uint64_t seed);

struct KsResult {
  double statistic = 0.0;
  double critical_99 = 0.0;
  double p_value = 1.0;
  bool reject_99 = false;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic 99% constant 1.6276.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct CpOptions {
  std::size_t n_samples = 200'000;
  std::uint64_t seed = 0;
  /// When both are set, the largest relative gap between E[Q^j] under the
  /// two input moment sequences is reported.
  std::optional<MomentSequence> moments1;
  std::optional<MomentSequence> moments2;
  int moment_order = 4;
};

/// statistic(t) = |phi_1(t) - phi_2(t)| for the empirical CFs of Q under each
/// law; both laws are driven by the same sub-seeds, which makes the report
/// symmetric in (dist1, dist2) and exactly zero for identical laws. A row
/// passes when the statistic is within 3 SE of zero. Also reports
/// two-sample KS on the Q values and on the marginals.
EnvelopeReport cp_distance(const SymmetricQuadraticForm& Q, const Distribution& dist1, const Distribution& dist2,
                           std::span<const double> t_grid, const CpOptions& options = {});

enum class StabilityMetric { ks, cf_sup };

struct StabilityOptions {
  StabilityMetric metric = StabilityMetric::ks;
  std::size_t n_samples = 100'000;
  std::vector<double> t_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::uint64_t seed = 0;
};

using Family = std::function<Distribution(int N)>;

/// For each N: d(Q under family(N), Q under target) and d(family(N), target).
/// Rows: abscissa N, statistic = Q distance, extras = marginal distance and
/// the noise floor. pass: both sequences trend down (Spearman < 0 and last
/// below first) or sit at the noise floor.
EnvelopeReport stability_experiment(const SymmetricQuadraticForm& Q, const Family& family, const Distribution& target,
                                    std::span<const int> N_grid, const StabilityOptions& options = {});

}  // namespace polyrand::characterization
