#include "polyrand/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "polyrand/error.hpp"
#include "polyrand/estimate.hpp"
#include "polyrand/parallel.hpp"
#include "polyrand/rng.hpp"

namespace polyrand::characterization {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15; }

cpp_rational to_rational(double v) {
  // Doubles are dyadic rationals; decompose exactly.
  if (v == 0.0) return cpp_rational(0);
  int exp = 0;
  double m = std::frexp(v, &exp);
  auto mant = static_cast<long long>(std::ldexp(m, 53));
  cpp_rational r(mant);
  exp -= 53;
  if (exp > 0) r *= cpp_rational(cpp_int(1) << exp);
  if (exp < 0) r /= cpp_rational(cpp_int(1) << -exp);
  return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = 0.5 * (i + j);
      for (std::size_t q = i; q <= j; ++q) r[idx[q]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Kolmogorov distribution survival: 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// n draws of Q(X_1..X_n) with X_p ~ law; chunk c uses derive_seed(seed, {c}).
struct QSample {
  std::vector<double> q;
  std::vector<double> first;  // X_1 of each draw
};

QSample sample_q(const SymmetricQuadraticForm& Q, const Distribution& law, std::size_t n, std::uint64_t seed) {
  QSample s;
  s.q.resize(n);
  s.first.resize(n);
  auto ch = make_chunking(n);
  parallel_for(ch.chunks, [&](std::size_t c) {
    Rng rng = make_rng(derive_seed(seed, {c}));
    std::vector<double> x(Q.n());
    for (std::size_t i = ch.begin(c); i < ch.end(c); ++i) {
      for (auto& v : x) v = law.draw(rng);
      s.q[i] = Q(x);
      s.first[i] = x[0];
    }
  });
  return s;
}

double cf_sup_distance(std::span<const double> a, std::span<const double> b, std::span<const double> t_grid) {
  double best = 0.0;
  for (double t : t_grid) {
    std::complex<double> sa = 0.0, sb = 0.0;
    for (double v : a) sa += std::polar(1.0, t * v);
    for (double v : b) sb += std::polar(1.0, t * v);
    best = std::max(best, std::abs(sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size())));
  }
  return best;
}

// Monomials in Z_1..Z_n as exponent vectors.
template <class T>
using Poly = std::map<std::vector<int>, T>;

template <class T>
std::vector<T> expand_moments(const std::vector<std::vector<T>>& a, const std::vector<T>& zmom, int N) {
  const int n = static_cast<int>(a.size());
  // Q as a polynomial: a_pp Z_p^2 + 2 a_pq Z_p Z_q (p < q).
  Poly<T> q;
  for (int p = 0; p < n; ++p) {
    for (int r = p; r < n; ++r) {
      if (a[p][r] == T(0)) continue;
      std::vector<int> e(n, 0);
      e[p] += 1;
      e[r] += 1;
      q[e] += p == r ? a[p][r] : T(2) * a[p][r];
    }
  }
  // E Z^e for one coordinate; odd exponents vanish by symmetry.
  auto mom = [&](int e) -> T {
    if (e == 0) return T(1);
    if (e % 2) return T(0);
    return zmom[e - 1];
  };
  std::vector<T> out;
  Poly<T> power;
  power[std::vector<int>(n, 0)] = T(1);
  for (int j = 1; j <= N; ++j) {
    Poly<T> next;
    for (const auto& [e1, c1] : power) {
      for (const auto& [e2, c2] : q) {
        std::vector<int> e(n);
        for (int i = 0; i < n; ++i) e[i] = e1[i] + e2[i];
        next[e] += c1 * c2;
      }
    }
    power = std::move(next);
    T expect(0);
    for (const auto& [e, c] : power) {
      T term = c;
      for (int i = 0; i < n && term != T(0); ++i) term *= mom(e[i]);
      expect += term;
    }
    out.push_back(expect);
  }
  return out;
}

double log_binomial(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

}  // namespace

SymmetricQuadraticForm::SymmetricQuadraticForm(std::vector<std::vector<double>> A) : a_(std::move(A)) {
  const std::size_t n = a_.size();
  if (n < 2) throw InvalidInput("SymmetricQuadraticForm: n must be >= 2");
  bool nonzero = false;
  for (const auto& row : a_) {
    if (row.size() != n) throw InvalidInput("SymmetricQuadraticForm: matrix must be square");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidInput("SymmetricQuadraticForm: entries must be finite");
      nonzero = nonzero || v != 0.0;
    }
  }
  if (!nonzero) throw InvalidInput("SymmetricQuadraticForm: matrix must be nonzero");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (a_[i][j] != a_[j][i]) throw InvalidInput("SymmetricQuadraticForm: matrix must be symmetric");
}

SymmetricQuadraticForm SymmetricQuadraticForm::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    return SymmetricQuadraticForm(j.get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("SymmetricQuadraticForm: bad JSON matrix: ") + ex.what());
  }
}

SymmetricQuadraticForm SymmetricQuadraticForm::from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput("SymmetricQuadraticForm: bad CSV cell '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return SymmetricQuadraticForm(std::move(rows));
}

bool SymmetricQuadraticForm::integer_entries() const {
  for (const auto& row : a_)
    for (double v : row)
      if (!is_integer(v)) return false;
  return true;
}

double SymmetricQuadraticForm::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n()) throw InvalidInput("SymmetricQuadraticForm: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < n(); ++i) {
    double row = 0.0;
    for (int j = 0; j < n(); ++j) row += a_[i][j] * x[j];
    s += x[i] * row;
  }
  return s;
}

std::string to_string(Case c) {
  switch (c) {
    case Case::case1: return "1";
    case Case::case2_1: return "2.1";
    case Case::case2_2_1: return "2.2.1";
    case Case::case2_2_2: return "2.2.2";
    case Case::case2_3: return "2.3";
    case Case::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

CaseLabel classify(const SymmetricQuadraticForm& Q, int K) {
  if (K < 0) throw InvalidInput("classify: K must be >= 0");
  const int n = Q.n();
  CaseLabel out;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = Q.a(i, i);
    out.trace += diag[i];
    for (int j = 0; j < n; ++j)
      if (i != j) out.offdiag_max = std::max(out.offdiag_max, std::abs(Q.a(i, j)));
  }
  double dmax = 0.0;
  for (double d : diag) dmax = std::max(dmax, std::abs(d));
  if (dmax == 0.0) {
    out.label = Case::case1;
    out.exact = true;
    return out;
  }
  out.exact = Q.integer_entries();
  // zero[k]: 1 vanishing, 0 nonzero, -1 ambiguous.
  std::vector<int> zero(K + 1);
  for (int k = 0; k <= K; ++k) {
    const int p = 2 * k + 1;
    double rel = 0.0;
    for (double d : diag) rel += std::pow(d / dmax, p);
    out.odd_power_sums.push_back(rel);
    if (out.exact) {
      cpp_int s = 0;
      for (double d : diag) s += boost::multiprecision::pow(cpp_int(static_cast<long long>(d)), p);
      zero[k] = s == 0 ? 1 : 0;
      if (zero[k]) out.odd_power_sums.back() = 0.0;
    } else {
      double mag = std::abs(rel);
      zero[k] = mag <= kZeroRel ? 1 : (mag <= kAmbiguousRel ? -1 : 0);
    }
  }
  for (int k = 1; k <= K; ++k) {
    if (zero[k] == 1) {
      out.first_vanishing_k = k;
      break;
    }
  }
  const bool off_zero = out.offdiag_max == 0.0;
  if (zero[0] == -1) {
    out.label = Case::indeterminate;
  } else if (zero[0] == 1) {
    out.label = off_zero ? Case::case2_2_1 : Case::case2_2_2;
  } else if (out.first_vanishing_k) {
    out.label = Case::case2_3;
  } else if (std::any_of(zero.begin() + 1, zero.end(), [](int z) { return z == -1; })) {
    out.label = Case::indeterminate;
  } else {
    out.label = Case::case2_1;
  }
  return out;
}

double MomentSequence::alpha(std::size_t j) const {
  if (j == 0) return 1.0;
  if (j > values.size()) throw InvalidInput("MomentSequence: moment of order " + std::to_string(j) + " not available");
  return values[j - 1];
}

bool MomentSequence::even_nonnegative() const {
  for (std::size_t j = 2; j <= values.size(); j += 2)
    if (!(values[j - 1] >= 0.0)) return false;
  return true;
}

bool MomentSequence::hankel_positive() const {
  const std::size_t m = values.size() / 2 + 1;  // H is m x m with entries alpha_{i+j}, i+j <= 2(m-1)
  if (values.size() < 2) return true;
  double s = values[1] > 0 ? std::sqrt(values[1]) : 1.0;
  std::vector<long double> h(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      h[i * m + j] = static_cast<long double>(alpha(i + j)) / std::pow(static_cast<long double>(s), i + j);
  // Cholesky; every pivot must be positive.
  for (std::size_t k = 0; k < m; ++k) {
    long double d = h[k * m + k];
    for (std::size_t q = 0; q < k; ++q) d -= h[k * m + q] * h[k * m + q];
    if (!(d > 0)) return false;
    long double r = std::sqrt(d);
    h[k * m + k] = r;
    for (std::size_t i = k + 1; i < m; ++i) {
      long double v = h[i * m + k];
      for (std::size_t q = 0; q < k; ++q) v -= h[i * m + q] * h[k * m + q];
      h[i * m + k] = v / r;
    }
  }
  return true;
}

MomentSequence MomentSequence::standard_normal(std::size_t order) {
  MomentSequence m;
  m.symmetric = true;
  double df = 1.0;
  for (std::size_t j = 1; j <= order; ++j) {
    if (j % 2) {
      m.values.push_back(0.0);
    } else {
      df *= static_cast<double>(j - 1);
      m.values.push_back(df);
    }
  }
  return m;
}

MomentSequence MomentSequence::root_exponential(std::size_t order) {
  MomentSequence m;
  m.symmetric = true;
  for (std::size_t j = 1; j <= order; ++j) m.values.push_back(j % 2 ? 0.0 : std::tgamma(2.0 * j + 2.0));
  return m;
}

MomentSequence MomentSequence::symmetric_from_even(std::vector<double> even) {
  MomentSequence m;
  m.symmetric = true;
  for (double v : even) {
    m.values.push_back(0.0);
    m.values.push_back(v);
  }
  return m;
}

QuadMoments quad_moments(const SymmetricQuadraticForm& Q, const MomentSequence& z_moments, int N) {
  if (N < 1) throw InvalidInput("quad_moments: N must be >= 1");
  if (!z_moments.symmetric) throw InvalidInput("quad_moments: input moments must be symmetric");
  const std::size_t need = 2 * static_cast<std::size_t>(N);
  if (z_moments.order() < need)
    throw InvalidInput("quad_moments: input moments needed up to order " + std::to_string(need));
  const int n = Q.n();
  // Monomials of degree 2N in n variables bound the work.
  double monomials = std::exp(log_binomial(n + 2.0 * N - 1, 2.0 * N));
  bool rational = monomials <= 2e5;
  for (std::size_t j = 1; j <= need && rational; ++j) rational = std::isfinite(z_moments.values[j - 1]);
  QuadMoments out;
  out.exact = rational;
  std::vector<double> vals;
  if (rational) {
    std::vector<std::vector<cpp_rational>> a(n, std::vector<cpp_rational>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i][j] = to_rational(Q.a(i, j));
    std::vector<cpp_rational> zm;
    for (std::size_t j = 1; j <= need; ++j) zm.push_back(to_rational(z_moments.values[j - 1]));
    for (const auto& v : expand_moments(a, zm, N)) vals.push_back(static_cast<double>(v));
  } else {
    std::vector<std::vector<double>> a = Q.matrix();
    std::vector<double> zm(z_moments.values.begin(), z_moments.values.begin() + need);
    vals = expand_moments(a, zm, N);
  }
  out.moments.values = vals;
  bool odd_zero = true;
  for (std::size_t j = 1; j <= vals.size(); j += 2) odd_zero = odd_zero && vals[j - 1] == 0.0;
  out.moments.symmetric = odd_zero;
  return out;
}

CarlemanDiagnostic carleman_diagnostic_log(std::span<const double> log_even) {
  CarlemanDiagnostic d;
  double sum = 0.0;
  std::vector<double> lx, ly, lr;
  for (std::size_t i = 0; i < log_even.size(); ++i) {
    double n2 = 2.0 * (i + 1);
    double la = log_even[i];
    double term = std::exp(-la / n2);  // +inf when alpha_{2n} = 0
    d.terms.push_back(term);
    sum += term;
    d.partial_sums.push_back(sum);
    double ratio = std::exp(la / n2) / n2;
    d.analytic_ratio.push_back(ratio);
    if (i + 1 > log_even.size() / 2) {
      lx.push_back(std::log(i + 1.0));
      ly.push_back(std::log(term));
      lr.push_back(std::log(ratio));
    }
  }
  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return 0.0;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
  };
  bool degenerate = std::any_of(d.terms.begin(), d.terms.end(), [](double t) { return std::isinf(t); });
  if (degenerate) {
    d.tail_exponent = 0.0;
    d.trend = "divergent";
    d.analytic_trend = "bounded";
    return d;
  }
  d.tail_exponent = slope(lx, ly);
  d.trend = d.tail_exponent > -0.9 ? "divergent" : (d.tail_exponent < -1.1 ? "convergent" : "borderline");
  double rs = slope(lx, lr);
  d.analytic_trend = rs < 0.05 ? "bounded" : (rs > 0.25 ? "unbounded" : "borderline");
  return d;
}

CarlemanDiagnostic carleman_diagnostic(const MomentSequence& moments) {
  std::vector<double> logs;
  for (std::size_t j = 2; j <= moments.order(); j += 2) {
    double a = moments.values[j - 1];
    if (a < 0.0) throw InvalidInput("carleman_diagnostic: even moments must be >= 0");
    logs.push_back(a == 0.0 ? -INFINITY : std::log(a));
  }
  return carleman_diagnostic_log(logs);
}

Distribution counterexample_sampler(const Distribution& base, double c) {
  if (!(c > 0.0)) throw InvalidInput("counterexample_sampler: c must be > 0");
  if (!base.symmetric()) throw InvalidInput("counterexample_sampler: base law must be symmetric");
  Distribution b = base;
  return Distribution("counterexample(" + base.name() + ")",
                      [b, c](Rng& rng) {
                        double z = b.draw(rng);
                        return random_sign(rng) * std::sqrt(z * z + c);
                      })
      .with_symmetry(true);
}

CounterexamplePairs counterexample_pairs(const Distribution& base, double c, std::size_t n, std::uint64_t seed) {
  if (!(c > 0.0)) throw InvalidInput("counterexample_pairs: c must be > 0");
  if (!base.symmetric()) throw InvalidInput("counterexample_pairs: base law must be symmetric");
  CounterexamplePairs p;
  p.z.resize(n);
  p.x.resize(n);
  auto ch = make_chunking(n);
  parallel_for(ch.chunks, [&](std::size_t k) {
    Rng rng = make_rng(derive_seed(seed, {k}));
    for (std::size_t i = ch.begin(k); i < ch.end(k); ++i) {
      double z = base.draw(rng);
      p.z[i] = z;
      p.x[i] = random_sign(rng) * std::sqrt(z * z + c);
    }
  });
  return p;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  double scale = std::sqrt(na * nb / (na + nb));
  r.critical_99 = 1.6276 / scale;
  r.p_value = kolmogorov_sf(d * scale);
  r.reject_99 = d > r.critical_99;
  return r;
}

EnvelopeReport cp_distance(const SymmetricQuadraticForm& Q, const Distribution& dist1, const Distribution& dist2,
                           std::span<const double> t_grid, const CpOptions& options) {
  if (!dist1.symmetric() || !dist2.symmetric()) throw InvalidInput("cp_distance: both laws must be symmetric");
  if (options.n_samples < 100) throw InvalidInput("cp_distance: n_samples must be >= 100");
  auto s1 = sample_q(Q, dist1, options.n_samples, options.seed);
  auto s2 = sample_q(Q, dist2, options.n_samples, options.seed);
  auto ch = make_chunking(options.n_samples);
  EnvelopeReport rep;
  rep.suite = "cp-test";
  rep.abscissa_name = "t";
  rep.extra_columns = {"std_error", "z"};
  double max_z = 0.0, max_stat = 0.0;
  std::vector<std::complex<double>> sums(ch.chunks);
  std::vector<std::size_t> counts(ch.chunks);
  for (double t : t_grid) {
    parallel_for(ch.chunks, [&](std::size_t c) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = ch.begin(c); i < ch.end(c); ++i)
        acc += std::polar(1.0, t * s1.q[i]) - std::polar(1.0, t * s2.q[i]);
      sums[c] = acc;
      counts[c] = ch.end(c) - ch.begin(c);
    });
    auto est = jackknife_mean(sums, counts);
    double stat = std::abs(est.value);
    double z = est.std_error > 0 ? stat / est.std_error : (stat == 0.0 ? 0.0 : INFINITY);
    rep.add_decided(t, stat, std::nullopt, 3.0 * est.std_error, stat <= 3.0 * est.std_error, {est.std_error, z});
    max_z = std::max(max_z, z);
    max_stat = std::max(max_stat, stat);
  }
  auto ks_q = ks_two_sample(s1.q, s2.q);
  auto ks_m = ks_two_sample(s1.first, s2.first);
  rep.set_metric("max_statistic", max_stat);
  rep.set_metric("max_z", max_z);
  rep.set_metric("ks_q_statistic", ks_q.statistic);
  rep.set_metric("ks_q_critical_99", ks_q.critical_99);
  rep.set_metric("ks_q_reject_99", ks_q.reject_99 ? 1.0 : 0.0);
  rep.set_metric("ks_marginal_statistic", ks_m.statistic);
  rep.set_metric("ks_marginal_reject_99", ks_m.reject_99 ? 1.0 : 0.0);
  bool cf_equal = rep.all_pass();
  rep.set_metric("cf_and_ks_agree", cf_equal == !ks_q.reject_99 ? 1.0 : 0.0);
  if (options.moments1 && options.moments2) {
    auto m1 = quad_moments(Q, *options.moments1, options.moment_order).moments.values;
    auto m2 = quad_moments(Q, *options.moments2, options.moment_order).moments.values;
    double gap = 0.0;
    for (std::size_t j = 0; j < m1.size(); ++j) {
      double scale = std::max({std::abs(m1[j]), std::abs(m2[j]), 1e-300});
      gap = std::max(gap, std::abs(m1[j] - m2[j]) / scale);
    }
    rep.set_metric("max_moment_rel_gap", gap);
  }
  rep.notes.push_back("both laws share sub-seeds; KS on these paired samples is conservative");
  return rep;
}

EnvelopeReport stability_experiment(const SymmetricQuadraticForm& Q, const Family& family, const Distribution& target,
                                    std::span<const int> N_grid, const StabilityOptions& options) {
  if (N_grid.empty()) throw InvalidInput("stability_experiment: empty N grid");
  if (options.n_samples < 100) throw InvalidInput("stability_experiment: n_samples must be >= 100");
  const std::size_t n = options.n_samples;
  auto distance = [&](std::span<const double> a, std::span<const double> b) {
    if (options.metric == StabilityMetric::ks)
      return ks_two_sample(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())).statistic;
    return cf_sup_distance(a, b, options.t_grid);
  };
  const double floor = options.metric == StabilityMetric::ks ? 1.6276 * std::sqrt(2.0 / n) : 4.0 * std::sqrt(2.0 / n);
  auto tq = sample_q(Q, target, n, derive_seed(options.seed, {1}));
  EnvelopeReport rep;
  rep.suite = "stability";
  rep.abscissa_name = "N";
  rep.extra_columns = {"marginal_distance", "noise_floor"};
  std::vector<double> xs, dq, dm;
  for (std::size_t i = 0; i < N_grid.size(); ++i) {
    int N = N_grid[i];
    auto fq = sample_q(Q, family(N), n, derive_seed(options.seed, {0, i}));
    double a = distance(fq.q, tq.q);
    double b = distance(fq.first, tq.first);
    rep.add_decided(N, a, std::nullopt, std::nullopt, true, {b, floor});
    xs.push_back(N);
    dq.push_back(a);
    dm.push_back(b);
  }
  double rq = spearman(xs, dq), rm = spearman(xs, dm);
  bool q_floor = *std::max_element(dq.begin(), dq.end()) <= floor;
  bool m_floor = *std::max_element(dm.begin(), dm.end()) <= floor;
  bool q_down = rq < 0 && dq.back() < dq.front();
  bool m_down = rm < 0 && dm.back() < dm.front();
  bool ok = (q_down || q_floor) && (m_down || m_floor);
  for (auto& row : rep.rows) row.pass = ok;
  rep.set_metric("spearman_q", rq);
  rep.set_metric("spearman_marginal", rm);
  rep.set_metric("q_at_noise_floor", q_floor ? 1.0 : 0.0);
  rep.set_metric("marginal_at_noise_floor", m_floor ? 1.0 : 0.0);
  rep.set_metric("q_decreasing", q_down ? 1.0 : 0.0);
  rep.set_metric("marginal_decreasing", m_down ? 1.0 : 0.0);
  rep.set_metric("noise_floor", floor);
  return rep;
}

}  // namespace polyrand::characterization
