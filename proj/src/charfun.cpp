#include "polyrand/charfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "polyrand/error.hpp"
#include "polyrand/numerics.hpp"
#include "polyrand/parallel.hpp"

namespace polyrand::charfun {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi); }

std::vector<double> shift_or_zero(std::span<const double> a, int dim) {
  if (a.empty()) return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  if (static_cast<int>(a.size()) != dim)
    throw InvalidInput("shift has dimension " + std::to_string(a.size()) + ", polynomial expects " +
                       std::to_string(dim));
  return {a.begin(), a.end()};
}

// Breakpoints for integrals of phi(z) h(t z) over z >= 0, where h varies on
// the scale 1/t.
std::vector<double> gaussian_breaks(double t) {
  std::set<double> b{0.0, 1.0, 3.0, 6.0, 12.0};
  if (t > 0.0)
    for (double c : {0.5, 2.0, 8.0, 32.0}) {
      const double z = c / t;
      if (z < 12.0) b.insert(z);
    }
  return {b.begin(), b.end()};
}

double monomial_closed(int k, double t) {
  if (k == 1) return std::exp(-0.5 * t * t);
  return 1.0 / std::sqrt(1.0 + t * t);
}

// g_k(t) = E g_{k-1}(t Z); levels below 3 use the exact g_1, g_2.
double monomial_quadrature(int k, double t, double rel_tol) {
  t = std::abs(t);
  if (k == 1) return monomial_closed(1, t);
  if (t == 0.0) return 1.0;
  auto inner = [k, rel_tol](double s) {
    return k - 1 <= 2 ? monomial_closed(k - 1, s) : monomial_quadrature(k - 1, s, rel_tol * 0.1);
  };
  auto f = [&](double z) { return 2.0 * std_normal_pdf(z) * inner(t * z); };
  return numerics::integrate_pieces(f, gaussian_breaks(t), rel_tol).value;
}

}  // namespace

std::vector<ComplexEstimate> cf_empirical_grid(const Distribution& dist, const AnyPolynomial& f, int n,
                                               std::span<const double> a, std::span<const double> t_grid,
                                               std::size_t n_samples, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("cf_empirical: n must be at least 1");
  if (n_samples < 100) throw InvalidInput("cf_empirical: n_samples must be at least 100");
  const int dim = dimension(f);
  const auto shift = shift_or_zero(a, dim);
  const auto chunking = make_chunking(n_samples);
  const std::size_t nt = t_grid.size();
  std::vector<std::complex<double>> sums(chunking.chunks * nt);
  std::vector<std::size_t> counts(chunking.chunks);
  parallel_for(chunking.chunks, [&](std::size_t c) {
    Rng rng = make_rng(derive_seed(seed, {c}));
    std::vector<double> point(static_cast<std::size_t>(dim));
    auto* acc = &sums[c * nt];
    for (std::size_t i = chunking.begin(c); i < chunking.end(c); ++i) {
      for (int d = 0; d < dim; ++d)
        point[static_cast<std::size_t>(d)] = normalized_sum(dist, n, rng) + shift[static_cast<std::size_t>(d)];
      const double v = eval_poly(f, point);
      for (std::size_t j = 0; j < nt; ++j) acc[j] += std::polar(1.0, t_grid[j] * v);
    }
    counts[c] = chunking.end(c) - chunking.begin(c);
  });
  std::vector<ComplexEstimate> out(nt);
  std::vector<std::complex<double>> column(chunking.chunks);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t c = 0; c < chunking.chunks; ++c) column[c] = sums[c * nt + j];
    out[j] = jackknife_mean(column, counts);
  }
  return out;
}

ComplexEstimate cf_empirical(const Distribution& dist, const AnyPolynomial& f, int n, std::span<const double> a,
                             double t, std::size_t n_samples, std::uint64_t seed) {
  const double grid[] = {t};
  return cf_empirical_grid(dist, f, n, a, grid, n_samples, seed).front();
}

int cantor_truncation(double t, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("cantor_cf: tol must be positive");
  const double log3 = std::log(3.0);
  const int head = static_cast<int>(std::ceil(std::log(std::max(std::abs(t), 1.0)) / log3));
  const int tail = static_cast<int>(std::ceil(std::ceil(std::log(std::numbers::pi * std::numbers::pi / tol) / log3) / 2.0));
  return head + std::max(tail, 0) + 2;
}

double cantor_cf(double t, double tol) {
  const int terms = cantor_truncation(t, tol);
  double theta = kTwoPi * t;
  double product = 1.0;
  for (int j = 1; j <= terms; ++j) {
    theta /= 3.0;
    product *= std::cos(theta);
  }
  return product;
}

EnvelopeReport cantor_cramer_scan(double t_min, double t_max, double step, double tol, double bound) {
  if (!(t_max > t_min) || !(step > 0.0)) throw InvalidInput("cantor_cramer_scan: need t_min < t_max, step > 0");
  if (bound < 1.0 && t_min < kCantorCramerThreshold)
    throw InvalidInput("cantor_cramer_scan: bounds below 1 only apply for t >= 8.5");
  if (t_min < 0.0) throw InvalidInput("cantor_cramer_scan: t_min must be nonnegative");
  EnvelopeReport report;
  report.suite = "cantor-scan";
  report.abscissa_name = "t";
  const auto count = static_cast<std::size_t>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
  std::vector<double> values(count);
  const std::size_t blocks = std::min<std::size_t>(count, 256);
  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t i = b * count / blocks; i < (b + 1) * count / blocks; ++i)
      values[i] = std::abs(cantor_cf(t_min + static_cast<double>(i) * step, tol));
  });
  report.rows.reserve(count);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    report.add(t_min + static_cast<double>(i) * step, values[i], std::nullopt, bound);
    if (values[i] > values[arg]) arg = i;
  }
  report.set_metric("argmax_t", t_min + static_cast<double>(arg) * step);
  report.set_metric("max_abs_L", values[arg]);
  report.set_metric("bound", bound);
  return report;
}

ComplexEstimate gaussian_monomial_cf(int k, double t, MonomialMethod method, std::size_t n_samples,
                                     std::uint64_t seed) {
  if (k < 1) throw InvalidInput("gaussian_monomial_cf: k must be at least 1");
  switch (method) {
    case MonomialMethod::closed_form:
      if (k > 2) throw InvalidInput("gaussian_monomial_cf: closed form only for k <= 2");
      return {{monomial_closed(k, t), 0.0}, 0.0, 1};
    case MonomialMethod::quadrature:
      if (k > 4) throw InvalidInput("gaussian_monomial_cf: quadrature only for k <= 4");
      return {{monomial_quadrature(k, t, 1e-12), 0.0}, 0.0, 1};
    case MonomialMethod::monte_carlo: {
      const auto f = MultiIndexPolynomial::product_of_coordinates(k);
      return cf_empirical(laws::normal(), f, 1, {}, t, n_samples, seed);
    }
  }
  throw InvalidInput("gaussian_monomial_cf: unknown method");
}

EnvelopeReport theorem4_envelope(int k, std::span<const double> t_grid) {
  if (k < 2 || k > 4) throw InvalidInput("theorem4_envelope: k must be in [2, 4]");
  EnvelopeReport report;
  report.suite = "theorem4";
  report.abscissa_name = "t";
  report.extra_columns = {"abs_cf"};
  std::vector<double> stats(t_grid.size()), absval(t_grid.size());
  for (double t : t_grid)
    if (t < 1.0) throw InvalidInput("theorem4_envelope: grid must lie in [1, inf)");
  parallel_for(t_grid.size(), [&](std::size_t i) {
    const double t = t_grid[i];
    const auto method = k == 2 ? MonomialMethod::closed_form : MonomialMethod::quadrature;
    absval[i] = std::abs(gaussian_monomial_cf(k, t, method).value);
    stats[i] = absval[i] * t / std::pow(std::log(2.0 + t), k - 2);
  });
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    report.add_decided(t_grid[i], stats[i], std::nullopt, std::nullopt, std::isfinite(stats[i]) && stats[i] > 0.0,
                       {absval[i]});
  report.set_metric("l_k_empirical", report.min_statistic());
  report.set_metric("L_k_empirical", report.max_statistic());
  report.set_metric("max_min_ratio", report.max_statistic() / report.min_statistic());
  return report;
}

double AveragedCFProfile::at(double T_value) const {
  for (std::size_t i = 0; i < T.size(); ++i)
    if (std::abs(T[i] - T_value) <= 1e-12 * std::max(1.0, std::abs(T_value))) return phi[i];
  throw InvalidInput("AveragedCFProfile: T = " + format_number(T_value) + " is not on the profile grid");
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("fit_loglog_slope: size mismatch");
  SlopeFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  const double n = static_cast<double>(x.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = std::log(y[i]) - fit.intercept - fit.slope * std::log(x[i]);
      rss += r * r;
    }
    fit.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

AveragedCFProfile phi_profile(const Distribution& dist, std::span<const double> T_grid, double quad_tol,
                              std::size_t empirical_samples, std::uint64_t seed) {
  std::function<double(double)> abs_cf;
  std::vector<double> draws;
  if (dist.exact_cf()) {
    const auto& cf = *dist.exact_cf();
    abs_cf = [&cf](double t) { return std::abs(cf(t)); };
  } else {
    if (empirical_samples < 100'000)
      throw InvalidInput("phi_profile: law has no exact CF; pass at least 1e5 empirical samples");
    draws = dist.sample(empirical_samples, seed);
    abs_cf = [&draws](double t) {
      std::complex<double> s = 0.0;
      for (double x : draws) s += std::polar(1.0, t * x);
      return std::abs(s) / static_cast<double>(draws.size());
    };
  }
  AveragedCFProfile profile;
  profile.T.assign(T_grid.begin(), T_grid.end());
  if (!std::is_sorted(profile.T.begin(), profile.T.end()) || profile.T.empty() || profile.T.front() <= 0.0)
    throw InvalidInput("phi_profile: T grid must be positive and ascending");
  double prev = 0.0, acc = 0.0;
  for (double T : profile.T) {
    std::vector<double> breaks{prev};
    for (double x = std::floor(prev) + 1.0; x < T; x += 1.0) breaks.push_back(x);
    breaks.push_back(T);
    acc += numerics::integrate_pieces(abs_cf, breaks, quad_tol, 12).value;
    profile.phi.push_back(2.0 * acc);
    prev = T;
  }
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < profile.T.size(); ++i)
    if (profile.T[i] >= profile.T.back() / 10.0 && profile.phi[i] > 0.0) {
      fx.push_back(profile.T[i]);
      fy.push_back(profile.phi[i]);
    }
  profile.growth_exponent = fit_loglog_slope(fx, fy).slope;
  return profile;
}

std::vector<double> condition5_grid(std::span<const double> b_grid, std::span<const double> t_grid) {
  std::set<double> values(t_grid.begin(), t_grid.end());
  for (double b : b_grid)
    for (double t : t_grid) values.insert(b * t);
  return {values.begin(), values.end()};
}

EnvelopeReport condition5_check(const AveragedCFProfile& profile, const std::function<double(double)>& phi_model,
                                double epsilon, std::span<const double> b_grid, std::span<const double> t_grid,
                                double rel_slack) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidInput("condition5_check: epsilon must lie in [0, 1/m)");
  for (double b : b_grid)
    if (b < 1.0) throw InvalidInput("condition5_check: b grid must lie in [1, inf)");
  for (double t : t_grid)
    if (t < 1.0) throw InvalidInput("condition5_check: t grid must lie in [1, inf)");
  EnvelopeReport report;
  report.suite = "condition5";
  report.abscissa_name = "bt";
  report.extra_columns = {"b", "t", "phi_X_bt", "model_bound"};
  for (double b : b_grid)
    for (double t : t_grid) {
      const double lhs = profile.at(b * t);
      const double rhs = std::pow(b, epsilon) * phi_model(t);
      report.add(b * t, lhs / rhs, std::nullopt, 1.0 + rel_slack, {b, t, lhs, rhs});
    }
  report.set_metric("epsilon", epsilon);
  report.set_metric("growth_exponent", profile.growth_exponent);
  return report;
}

EnvelopeReport decay_envelope(const Distribution& dist, const AnyPolynomial& f, int n, std::span<const double> a,
                              std::span<const double> t_grid, DecayModel model, std::size_t n_samples,
                              std::uint64_t seed) {
  for (double t : t_grid)
    if (t < 1.0) throw InvalidInput("decay_envelope: t grid must lie in [1, inf)");
  const auto est = cf_empirical_grid(dist, f, n, a, t_grid, n_samples, seed);
  EnvelopeReport report;
  report.suite = "decay";
  report.abscissa_name = "t";
  report.extra_columns = {"abs_cf", "std_error", "inconclusive"};
  const double t_top = t_grid.empty() ? 0.0 : *std::max_element(t_grid.begin(), t_grid.end());
  std::vector<double> fx, fy;
  std::size_t inconclusive_count = 0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double g = std::abs(est[i].value);
    const double se = est[i].std_error;
    const bool inconclusive = g < 5.0 * se;
    inconclusive_count += inconclusive;
    const double scale = std::pow(t, model.D) / (model.c > 0.0 ? model.c : 1.0);
    std::optional<double> upper;
    if (model.c > 0.0) upper = 1.0 + 3.0 * se * scale;
    const double stat = g * scale;
    const bool within = std::isfinite(stat) && (!upper || stat <= *upper);
    report.add_decided(t, stat, std::nullopt, upper, inconclusive || within,
                       {g, se, inconclusive ? 1.0 : 0.0});
    if (!inconclusive && t >= t_top / 10.0) {
      fx.push_back(t);
      fy.push_back(g);
    }
  }
  const auto fit = fit_loglog_slope(fx, fy);
  report.set_metric("fitted_slope", fit.slope);
  report.set_metric("fitted_slope_se", fit.std_error);
  report.set_metric("fit_points", static_cast<double>(fit.points));
  report.set_metric("inconclusive_points", static_cast<double>(inconclusive_count));
  if (fit.points < 2) report.notes.push_back("exponent fit skipped: fewer than two conclusive points in top decade");
  return report;
}

int cantor_power_threshold(double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("cantor_power_threshold: epsilon must be positive");
  return static_cast<int>(std::ceil(std::log(2.0 / (std::pow(3.0, epsilon) - 1.0)) / 0.027));
}

}  // namespace polyrand::charfun
