#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrand/report.hpp"

namespace polyrand::quadform {

/// Tail variances continue as sigma_J^2 rho^i (i >= 1) after the last
/// explicit tail variance sigma_J^2. The shift energy `shift_sq_total` is
/// spread over the continuation in proportion to the variances.
struct GeometricContinuation {
  double ratio = 0.5;
  double shift_sq_total = 0.0;
};

/// Y = sum_j Y_j e_j with independent Y_j ~ N(0, sigma_j^2); the top
/// eigenvalue sigma_1^2 has multiplicity k. Shifts are the coordinates a_j.
struct HilbertGaussianSpec {
  double head_variance = 1.0;
  int k = 1;
  /// a_1..a_k; shorter lists are padded with zeros.
  std::vector<double> head_shift;
  /// sigma_{k+1}^2 >= sigma_{k+2}^2 >= ...
  std::vector<double> tail_variances;
  /// a_{k+1}..; shorter lists are padded with zeros.
  std::vector<double> tail_shift;
  std::optional<GeometricContinuation> continuation;
  /// Use |a_k|^2 instead of the printed |a_3|^2 in the k >= 4 threshold.
  bool threshold_uses_head_k = false;

  void validate() const;
  /// |(a_1, ..., a_i)|^2 for i <= k.
  double head_shift_sq(int i) const;
  double head_shift_sq() const { return head_shift_sq(k); }

  /// Keys: head_variance, multiplicity, head_shift, tail_variances,
  /// tail_shift, geometric_ratio, continuation_shift_sq,
  /// threshold_uses_head_k. Unknown keys are rejected.
  static HilbertGaussianSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct TailFunctionals {
  /// E R = sum_{j>k} (sigma_j^2 + a_j^2)
  double ER = 0.0;
  /// W = E exp{R / (2 sigma_1^2)}
  double W = 1.0;
  double log_W = 0.0;
  double u0 = 0.0;
  /// Lower-bound threshold for k = 3.
  std::optional<double> u_star;
  /// Lower-bound threshold for k >= 4 as printed (with |a_3|^2).
  std::optional<double> u_double_star;
  /// Same threshold with |a_k|^2.
  std::optional<double> u_double_star_head_k;
  /// Explicit factors multiplied before the closed-form remainder.
  std::size_t terms_used = 0;
};

/// Density at u of sum_{i<=k} (Y_i - a_i)^2, Y_i ~ N(0, sigma1_sq), |a|^2 = lambda.
double noncentral_fk(double u, int k, double sigma1_sq, double lambda);
/// Natural log of the same density (-inf where it vanishes).
double log_noncentral_fk(double u, int k, double sigma1_sq, double lambda);

struct FkBounds {
  double bound_a = 0.0;
  std::optional<double> bound_b;
  double log_bound_a = 0.0;
  std::optional<double> log_bound_b;
};

/// The two upper bounds for f_k; `head_norm` is |a_k| (not squared).
FkBounds fk_upper_bounds(double u, int k, double sigma1_sq, double head_norm);
double fk_bound_constant(int k);

TailFunctionals tilt_weight(const HilbertGaussianSpec& spec, double tol = 1e-15);

enum class DensityMethod { cf_inversion, mc_kde };

struct DensityParams {
  double rel_tol = 1e-10;
  std::size_t n_mc = 1'000'000;
  /// Kernel bandwidth for mc_kde; 0 selects sd * n^{-1/9}.
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
};

struct DensityResult {
  double value = 0.0;
  double log_value = 0.0;
  /// Absolute error estimate (quadrature or SE plus bias estimate).
  double error = 0.0;
  double rel_error = 0.0;
  bool converged = true;
  /// mc_kde: h versus 2h bias estimate included in `error`.
  std::optional<double> bias_estimate;
};

DensityResult density_p(const HilbertGaussianSpec& spec, double u, DensityMethod method,
                        const DensityParams& params = {});

/// mc_kde on several points from one shared sample.
std::vector<DensityResult> density_kde_grid(const HilbertGaussianSpec& spec, std::span<const double> u,
                                            const DensityParams& params);

enum class TailMethod { integrate_p, survival_inversion, mc };

struct TailResult {
  double value = 0.0;
  double log_value = 0.0;
  double error = 0.0;
  /// error / value, kept separately because value may underflow.
  double rel_error = 0.0;
  /// Chernoff bound on the part of the integral not computed (integrate_p).
  double remainder_bound = 0.0;
  bool converged = true;
};

/// P(|Y - a| > r).
TailResult tail_prob(const HilbertGaussianSpec& spec, double r, TailMethod method, const DensityParams& params = {});

/// Draws of |Y - a|^2; coordinates with sigma_j^2 < 1e-13 sigma_1^2 enter through their mean.
std::vector<double> sample_norm_sq(const HilbertGaussianSpec& spec, std::size_t n, std::uint64_t seed);

struct Theorem15Options {
  DensityParams density;
  /// Bulk points where inversion is compared against mc_kde (empty: none).
  std::vector<double> mc_check_points;
};

/// statistic(u) = p(u, a) / (f_k(u, a) W). Upper bound 1 on every point, lower
/// bound 0.125 from the k-dependent threshold on; both with 3 error bars.
EnvelopeReport verify_theorem15(const HilbertGaussianSpec& spec, std::span<const double> u_grid,
                                const Theorem15Options& options = {});

/// Smallest admissible r: sigma_1^2/|a_k| + 2|a_k| + sqrt(u**).
double theorem16_threshold(const HilbertGaussianSpec& spec);

/// statistic(r) = P(|Y-a|>r) exp{(r-|a_k|)^2/(2 sigma_1^2)} sigma_1 r^{(k-3)/2} |a_k|^{(k-1)/2} / W.
/// The tail itself decays like r^{(k-3)/2} exp{-(r-|a_k|)^2/(2 sigma_1^2)}, so this
/// statistic grows like r^{k-3}; the column `inverse_power_statistic` uses
/// r^{-(k-3)/2} instead and is reported alongside.
EnvelopeReport verify_theorem16(const HilbertGaussianSpec& spec, std::span<const double> r_grid,
                                const DensityParams& params = {},
                                TailMethod method = TailMethod::survival_inversion);

}  // namespace polyrand::quadform
