#include "polyrand/vinogradov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "polyrand/estimate.hpp"
#include "polyrand/numerics.hpp"
#include "polyrand/parallel.hpp"
#include "polyrand/rng.hpp"

namespace polyrand::vinogradov {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSecondsPerOp = 5e-9;
constexpr double kMaxOperations = 2e11;

using u128 = unsigned __int128;

std::complex<double> unit_phase(long double cycles) {
  long double frac = cycles - std::floor(cycles);
  return std::polar(1.0, kTwoPi * static_cast<double>(frac));
}

long double poly_value(const std::vector<double>& alpha, long double x) {
  long double acc = 0.0L;
  for (std::size_t j = alpha.size(); j-- > 0;) acc = (acc + alpha[j]) * x;
  return acc;
}

void check_count_args(int P, int m, int k) {
  if (P < 1) throw InvalidInput("jk_count: P must be >= 1");
  if (m < 2) throw InvalidInput("jk_count: m must be >= 2");
  if (k < 1) throw InvalidInput("jk_count: k must be >= 1");
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

long long ipow_ll(long long x, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double binomial(double n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Power sums must fit in int64 and the packed signature in 128 bits.
void check_ranges(int P, int m, int k) {
  double top = static_cast<double>(k) * ipow(P, m);
  if (top > 4e18) {
    CostEstimate c;
    c.feasible = false;
    c.detail = "power sums exceed 64-bit range";
    throw Infeasible("jk_count: power sums overflow 64-bit integers", c);
  }
}

std::vector<std::uint64_t> signature_radices(int P, int m, int k) {
  std::vector<std::uint64_t> radix(m);
  long double total = 1.0L;
  for (int j = 1; j <= m; ++j) {
    radix[j - 1] = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(ipow_ll(P, j)) + 1;
    total *= static_cast<long double>(radix[j - 1]);
  }
  if (total >= 1.7e38L) {
    CostEstimate c;
    c.feasible = false;
    c.detail = "signature does not pack into 128 bits";
    throw Infeasible("jk_count: signature key too wide", c);
  }
  return radix;
}

struct U128Hash {
  std::size_t operator()(u128 v) const noexcept {
    return static_cast<std::size_t>(mix64(static_cast<std::uint64_t>(v) ^ mix64(static_cast<std::uint64_t>(v >> 64))));
  }
};

std::uint64_t count_enumerate(int P, int m, int k) {
  std::size_t tuples = static_cast<std::size_t>(ipow_ll(P, k));
  std::vector<long long> sig(tuples * m);
  std::vector<int> x(k, 1);
  for (std::size_t t = 0; t < tuples; ++t) {
    for (int j = 1; j <= m; ++j) {
      long long s = 0;
      for (int i = 0; i < k; ++i) s += ipow_ll(x[i], j);
      sig[t * m + (j - 1)] = s;
    }
    for (int i = k - 1; i >= 0; --i) {
      if (++x[i] <= P) break;
      x[i] = 1;
    }
  }
  // Tuples are ordered with x_1 slowest, so slot x_1 owns a contiguous range.
  std::size_t per_lead = tuples / static_cast<std::size_t>(P);
  std::vector<std::uint64_t> slot(P, 0);
  parallel_for(static_cast<std::size_t>(P), [&](std::size_t lead) {
    std::uint64_t c = 0;
    for (std::size_t a = lead * per_lead; a < (lead + 1) * per_lead; ++a) {
      const long long* sa = &sig[a * m];
      for (std::size_t b = 0; b < tuples; ++b) {
        const long long* sb = &sig[b * m];
        bool eq = true;
        for (int j = 0; j < m; ++j) {
          if (sa[j] != sb[j]) {
            eq = false;
            break;
          }
        }
        c += eq;
      }
    }
    slot[lead] = c;
  });
  std::uint64_t total = 0;
  for (auto c : slot) total += c;
  return total;
}

using Histogram = std::unordered_map<u128, std::uint64_t, U128Hash>;

// Nondecreasing k-tuples with smallest entry `lead`, weighted by the number of
// ordered tuples sharing the multiset.
void histogram_for_lead(int P, int m, int k, int lead, const std::vector<std::uint64_t>& radix,
                        const std::vector<std::uint64_t>& factorial, Histogram& out) {
  std::vector<int> x(k, lead);
  std::vector<long long> pw(static_cast<std::size_t>(P + 1) * m);
  for (int v = 1; v <= P; ++v)
    for (int j = 1; j <= m; ++j) pw[v * m + (j - 1)] = ipow_ll(v, j);
  while (true) {
    std::uint64_t denom = 1;
    int run = 1;
    for (int i = 1; i < k; ++i) {
      if (x[i] == x[i - 1]) {
        ++run;
      } else {
        denom *= factorial[run];
        run = 1;
      }
    }
    denom *= factorial[run];
    u128 key = 0;
    for (int j = m; j >= 1; --j) {
      long long s = 0;
      for (int i = 0; i < k; ++i) s += pw[x[i] * m + (j - 1)];
      key = key * radix[j - 1] + static_cast<u128>(s);
    }
    out[key] += factorial[k] / denom;
    int i = k - 1;
    while (i >= 1 && x[i] == P) --i;
    if (i == 0) break;
    int v = x[i] + 1;
    for (int r = i; r < k; ++r) x[r] = v;
  }
}

std::uint64_t count_histogram(int P, int m, int k) {
  auto radix = signature_radices(P, m, k);
  std::vector<std::uint64_t> factorial(k + 1, 1);
  for (int i = 1; i <= k; ++i) factorial[i] = factorial[i - 1] * static_cast<std::uint64_t>(i);
  Histogram total;
  // Batches of leading values are histogrammed in parallel and merged in
  // lead order; the merged map and its sum do not depend on the worker count.
  std::size_t batch = std::max<std::size_t>(1, jobs());
  for (int start = 1; start <= P; start += static_cast<int>(batch)) {
    int stop = std::min(P, start + static_cast<int>(batch) - 1);
    std::vector<Histogram> partial(stop - start + 1);
    parallel_for(partial.size(), [&](std::size_t i) {
      histogram_for_lead(P, m, k, start + static_cast<int>(i), radix, factorial, partial[i]);
    });
    for (auto& h : partial)
      for (const auto& [key, n] : h) total[key] += n;
  }
  u128 j = 0;
  for (const auto& [key, n] : total) j += static_cast<u128>(n) * n;
  if (j > static_cast<u128>(UINT64_MAX)) {
    CostEstimate c;
    c.feasible = false;
    c.detail = "count exceeds 64 bits";
    throw Infeasible("jk_count: count overflows 64-bit integer", c);
  }
  return static_cast<std::uint64_t>(j);
}

// Tensor Gauss-Legendre over [0,1]^m of |sum_i w_i exp{2 pi i f(x_i)}|^{2k},
// f(x) = sum_j alpha_j x^j. The integrand is a trigonometric polynomial whose
// frequency in alpha_j is at most k (max x^j - min x^j); each panel covers at
// most two periods.
struct CellRule {
  std::vector<std::vector<double>> nodes;
  std::vector<std::vector<double>> weights;
  double points = 1.0;
};

CellRule make_cell_rule(const std::vector<long long>& xs, int m, int k, std::size_t order) {
  CellRule rule;
  const auto& gl = numerics::gauss_legendre(order);
  for (int j = 1; j <= m; ++j) {
    long double lo = 0, hi = 0;
    bool first = true;
    for (long long x : xs) {
      long double v = std::pow(static_cast<long double>(x), j);
      if (first || v < lo) lo = v;
      if (first || v > hi) hi = v;
      first = false;
    }
    double freq = static_cast<double>(k * (hi - lo));
    std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(freq / 2.0)));
    std::vector<double> nd, wt;
    nd.reserve(panels * order);
    wt.reserve(panels * order);
    double h = 1.0 / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      double a = p * h;
      for (std::size_t q = 0; q < order; ++q) {
        nd.push_back(a + 0.5 * h * (gl.nodes[q] + 1.0));
        wt.push_back(0.5 * h * gl.weights[q]);
      }
    }
    rule.points *= static_cast<double>(nd.size());
    rule.nodes.push_back(std::move(nd));
    rule.weights.push_back(std::move(wt));
  }
  return rule;
}

double cell_integral(const std::vector<long long>& xs, const std::vector<double>& w, int m, int k,
                     std::size_t order) {
  CellRule rule = make_cell_rule(xs, m, k, order);
  const std::size_t na = xs.size();
  // tables[j][node * na + i] = exp{2 pi i alpha_j x_i^j}
  std::vector<std::vector<std::complex<double>>> tables(m);
  for (int j = 0; j < m; ++j) {
    const auto& nd = rule.nodes[j];
    tables[j].resize(nd.size() * na);
    for (std::size_t q = 0; q < nd.size(); ++q) {
      for (std::size_t i = 0; i < na; ++i) {
        long double power = std::pow(static_cast<long double>(xs[i]), j + 1);
        tables[j][q * na + i] = unit_phase(static_cast<long double>(nd[q]) * power);
      }
    }
  }
  // Parallel over the nodes of the last (largest) coordinate.
  const int outer = m - 1;
  const std::size_t n_outer = rule.nodes[outer].size();
  std::vector<double> slot(n_outer, 0.0);
  parallel_for(n_outer, [&](std::size_t qo) {
    std::vector<std::vector<std::complex<double>>> partial(m + 1, std::vector<std::complex<double>>(na));
    for (std::size_t i = 0; i < na; ++i) partial[0][i] = w[i] * tables[outer][qo * na + i];
    double acc = 0.0;
    // Odometer over the remaining coordinates 0..m-2.
    std::vector<std::size_t> idx(m, 0);
    std::vector<double> wprod(m + 1, 1.0);
    wprod[0] = rule.weights[outer][qo];
    int depth = 0;
    const int inner_dims = m - 1;
    if (inner_dims == 0) {
      std::complex<double> s = 0.0;
      for (std::size_t i = 0; i < na; ++i) s += partial[0][i];
      slot[qo] = wprod[0] * std::pow(std::norm(s), k);
      return;
    }
    while (depth >= 0) {
      if (idx[depth] == rule.nodes[depth].size()) {
        idx[depth] = 0;
        --depth;
        if (depth >= 0) ++idx[depth];
        continue;
      }
      const std::size_t q = idx[depth];
      const auto* tab = &tables[depth][q * na];
      for (std::size_t i = 0; i < na; ++i) partial[depth + 1][i] = partial[depth][i] * tab[i];
      wprod[depth + 1] = wprod[depth] * rule.weights[depth][q];
      if (depth + 1 == inner_dims) {
        std::complex<double> s = 0.0;
        for (std::size_t i = 0; i < na; ++i) s += partial[depth + 1][i];
        acc += wprod[depth + 1] * std::pow(std::norm(s), k);
        ++idx[depth];
      } else {
        ++depth;
      }
    }
    slot[qo] = acc;
  });
  double total = 0.0;
  for (double v : slot) total += v;
  return total;
}

struct CellResult {
  double value = 0.0;
  bool converged = true;
};

CellResult cell_integral_checked(const std::vector<long long>& xs, const std::vector<double>& w, int m, int k,
                                 double tol) {
  double a = cell_integral(xs, w, m, k, 12);
  double b = cell_integral(xs, w, m, k, 16);
  double scale = std::max(std::abs(b), 1e-300);
  return {b, std::abs(a - b) <= tol * scale};
}

double cell_points(const std::vector<long long>& xs, int m, int k) {
  double pts = 1.0;
  for (int j = 1; j <= m; ++j) {
    long double lo = 0, hi = 0;
    bool first = true;
    for (long long x : xs) {
      long double v = std::pow(static_cast<long double>(x), j);
      if (first || v < lo) lo = v;
      if (first || v > hi) hi = v;
      first = false;
    }
    pts *= std::max(1.0, std::ceil(static_cast<double>(k * (hi - lo)) / 2.0));
  }
  return pts * (ipow(12, m) + ipow(16, m));
}

// Atoms of S inside (-P, P].
std::vector<Atom> active_atoms(const std::vector<Atom>& atoms, double P) {
  std::vector<Atom> out;
  for (const auto& a : atoms)
    if (a.x > -P && a.x <= P && a.p > 0.0) out.push_back(a);
  return out;
}

bool all_integer(const std::vector<Atom>& atoms) {
  return std::all_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.x == std::round(a.x); });
}

constexpr std::size_t kMaxExactAtoms = 10'000;
constexpr std::size_t kUniformOrder = 10;

std::size_t uniform_panels(double L, double U, const std::vector<double>& alpha) {
  double X = std::max(std::abs(L), std::abs(U));
  double deriv = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) deriv += (j + 1) * std::abs(alpha[j]) * ipow(X, static_cast<int>(j));
  double variation = kTwoPi * deriv * (U - L);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(variation / std::numbers::pi)));
}

std::complex<double> uniform_inner(double L, double U, double density, const std::vector<double>& alpha) {
  if (!(U > L)) return 0.0;
  std::size_t panels = uniform_panels(L, U, alpha);
  const auto& gl = numerics::gauss_legendre(kUniformOrder);
  double h = (U - L) / static_cast<double>(panels);
  std::complex<double> acc = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    double a = L + p * h;
    std::complex<double> part = 0.0;
    for (std::size_t q = 0; q < kUniformOrder; ++q) {
      double x = a + 0.5 * h * (gl.nodes[q] + 1.0);
      part += gl.weights[q] * unit_phase(poly_value(alpha, x));
    }
    acc += part * (0.5 * h);
  }
  return density * acc;
}

// How E exp{2 pi i f(S)} 1{-P < S <= P} is evaluated for a given law.
struct InnerEvaluator {
  enum class Kind { atoms, uniform, sample } kind = Kind::sample;
  std::vector<Atom> atoms;
  double L = 0.0, U = 0.0, density = 0.0;
  std::vector<double> draws;  // active draws only
  std::size_t n_draws = 0;    // including inactive draws

  std::complex<double> eval(const std::vector<double>& alpha) const {
    switch (kind) {
      case Kind::atoms: {
        std::complex<double> s = 0.0;
        for (const auto& a : atoms) s += a.p * unit_phase(poly_value(alpha, a.x));
        return s;
      }
      case Kind::uniform:
        return uniform_inner(L, U, density, alpha);
      case Kind::sample:
        break;
    }
    std::complex<double> s = 0.0;
    for (double x : draws) s += unit_phase(poly_value(alpha, x));
    return s / static_cast<double>(n_draws);
  }

  // Inner averages over the two halves of the fixed sample (draw order).
  std::pair<std::complex<double>, std::complex<double>> eval_halves(const std::vector<double>& alpha,
                                                                    std::size_t split) const {
    std::complex<double> a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      auto z = unit_phase(poly_value(alpha, draws[i]));
      (i < split ? a : b) += z;
    }
    std::size_t half_a = n_draws / 2, half_b = n_draws - n_draws / 2;
    return {a / static_cast<double>(half_a), b / static_cast<double>(half_b)};
  }
  std::size_t split_index = 0;  // number of active draws among the first n_draws/2
};

InnerEvaluator make_inner(const Distribution& S, double P, const IkOptions& opt) {
  InnerEvaluator ev;
  if (S.atoms() && S.atoms()->size() <= kMaxExactAtoms) {
    ev.kind = InnerEvaluator::Kind::atoms;
    ev.atoms = active_atoms(*S.atoms(), P);
    return ev;
  }
  if (auto u = S.uniform_density()) {
    ev.kind = InnerEvaluator::Kind::uniform;
    ev.L = std::max(u->lo, -P);
    ev.U = std::min(u->hi, P);
    ev.density = 1.0 / (u->hi - u->lo);
    return ev;
  }
  if (opt.n_inner < 2) throw InvalidInput("ik_estimate: n_inner must be >= 2");
  ev.kind = InnerEvaluator::Kind::sample;
  auto xs = S.sample(opt.n_inner, derive_seed(opt.seed, {0x1a4e5ULL}));
  ev.n_draws = xs.size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > -P && xs[i] <= P) {
      if (i < xs.size() / 2) ++ev.split_index;
      ev.draws.push_back(xs[i]);
    }
  }
  return ev;
}

double support_radius(const Distribution& S, double P) {
  double r = P;
  if (auto b = S.support_bound()) r = std::min(r, *b);
  if (auto u = S.uniform_density()) r = std::min(r, std::max(std::abs(u->lo), std::abs(u->hi)));
  return std::max(r, 1.0);
}

// Truncated Cauchy on [-B, B] with scale s.
struct TruncCauchy {
  double s, B, z;
  explicit TruncCauchy(double scale, double bound) : s(scale), B(bound), z(std::atan(bound / scale)) {}
  double draw(Rng& rng) const { return s * std::tan((2.0 * uniform01(rng) - 1.0) * z); }
  double pdf(double a) const { return 1.0 / (2.0 * z * s * (1.0 + (a / s) * (a / s))); }
  double mean_abs() const { return s * std::log1p((B / s) * (B / s)) / (2.0 * z); }
};

double inner_cost(const InnerEvaluator& ev, const std::vector<double>& mean_abs_alpha, int m) {
  switch (ev.kind) {
    case InnerEvaluator::Kind::atoms:
      return static_cast<double>(std::max<std::size_t>(1, ev.atoms.size())) * m;
    case InnerEvaluator::Kind::uniform:
      return static_cast<double>(uniform_panels(ev.L, ev.U, mean_abs_alpha) * kUniformOrder) * m;
    case InnerEvaluator::Kind::sample:
      return static_cast<double>(std::max<std::size_t>(1, ev.draws.size())) * m;
  }
  return 1.0;
}

void check_ik_args(double P, int m, int k, const IkOptions& opt) {
  if (!(P >= 1.0)) throw InvalidInput("ik_estimate: P must be >= 1");
  if (m < 1) throw InvalidInput("ik_estimate: m must be >= 1");
  if (k < 1) throw InvalidInput("ik_estimate: k must be >= 1");
  if (opt.method != IkMethod::unit_cell_quadrature && opt.n_mc < 2)
    throw InvalidInput("ik_estimate: n_mc must be >= 2");
  if (opt.method == IkMethod::box_stratified && opt.n_mc < 2 * (std::size_t{1} << m))
    throw InvalidInput("ik_estimate: box_stratified needs n_mc >= 2^(m+1)");
  if (opt.method == IkMethod::importance && !(opt.importance_scale > 0.0))
    throw InvalidInput("ik_estimate: importance_scale must be positive");
}

std::vector<double> importance_scales(const Distribution& S, double P, int m, double kappa) {
  double R = support_radius(S, P);
  std::vector<double> s(m);
  for (int j = 1; j <= m; ++j) s[j - 1] = kappa * std::pow(R, -j);
  return s;
}

CostEstimate ik_cost_impl(const Distribution& S, double P, int m, int k, const IkOptions& opt,
                          const InnerEvaluator* ev_in) {
  CoefficientBox box{m, P};
  CostEstimate c;
  std::ostringstream detail;
  if (opt.method == IkMethod::unit_cell_quadrature) {
    if (!S.atoms() || S.atoms()->size() > kMaxExactAtoms || !all_integer(*S.atoms()))
      throw InvalidInput("ik_estimate: unit_cell_quadrature needs integer atoms");
    if (P != std::floor(P)) throw InvalidInput("ik_estimate: unit_cell_quadrature needs integer P");
    std::vector<long long> xs;
    for (const auto& a : active_atoms(*S.atoms(), P)) xs.push_back(static_cast<long long>(a.x));
    c.operations = xs.empty() ? 1.0 : cell_points(xs, m, k) * static_cast<double>(xs.size());
    detail << "unit-cell grid with " << xs.size() << " atoms";
  } else {
    InnerEvaluator local;
    const InnerEvaluator* ev = ev_in;
    if (!ev) {
      IkOptions probe = opt;
      probe.n_inner = std::min<std::size_t>(opt.n_inner, 1000);
      local = make_inner(S, P, probe);
      if (local.kind == InnerEvaluator::Kind::sample && opt.n_inner > probe.n_inner) {
        double scale = static_cast<double>(opt.n_inner) / static_cast<double>(probe.n_inner);
        local.draws.resize(static_cast<std::size_t>(local.draws.size() * scale), 0.0);
      }
      ev = &local;
    }
    std::vector<double> mean_abs(m);
    if (opt.method == IkMethod::importance) {
      auto s = importance_scales(S, P, m, opt.importance_scale);
      for (int j = 1; j <= m; ++j) mean_abs[j - 1] = TruncCauchy(s[j - 1], box.half_width(j)).mean_abs();
    } else {
      for (int j = 1; j <= m; ++j) mean_abs[j - 1] = 0.5 * box.half_width(j);
    }
    c.operations = static_cast<double>(opt.n_mc) * inner_cost(*ev, mean_abs, m);
    detail << opt.n_mc << " coefficient draws";
  }
  c.bytes = 1e6;
  c.seconds = c.operations * kSecondsPerOp;
  c.feasible = c.operations <= kMaxOperations;
  c.detail = detail.str();
  return c;
}

}  // namespace

std::complex<double> weyl_sum(long long P, const VinogradovPolynomial& f) {
  if (P < 1) throw InvalidInput("weyl_sum: P must be >= 1");
  std::complex<double> s = 0.0;
  for (long long x = 1; x <= P; ++x) s += std::polar(1.0, kTwoPi * f.phase_mod1(x));
  return s;
}

CostEstimate jk_cost(int P, int m, int k, CountMethod method) {
  check_count_args(P, m, k);
  CostEstimate c;
  std::ostringstream d;
  if (method == CountMethod::enumerate) {
    double pairs = ipow(P, 2 * k);
    c.operations = pairs * m;
    c.bytes = ipow(P, k) * m * 8.0;
    c.seconds = pairs * 1.5e-9;
    c.feasible = pairs <= kMaxEnumeratePairs;
    d << "enumerate: " << pairs << " tuple pairs";
  } else {
    double keys = binomial(P + k - 1, k);
    c.operations = keys * k * m;
    c.bytes = keys * 64.0;
    c.seconds = keys * 1.5e-7;
    c.feasible = keys <= kMaxHistogramKeys;
    d << "signature_histogram: " << keys << " multisets (worst-case keys)";
  }
  c.detail = d.str();
  return c;
}

DiophantineCount jk_count(int P, int m, int k, CountMethod method) {
  CostEstimate c = jk_cost(P, m, k, method);
  if (!c.feasible) throw Infeasible("jk_count: " + c.detail + " exceeds limits", c);
  check_ranges(P, m, k);
  DiophantineCount out{P, m, k, 0};
  out.count = method == CountMethod::enumerate ? count_enumerate(P, m, k) : count_histogram(P, m, k);
  return out;
}

VinogradovConstants vinogradov_constants(int m, int tau) {
  if (m <= 2) throw InvalidInput("vinogradov_constants: m must be > 2");
  if (tau < 1) throw InvalidInput("vinogradov_constants: tau must be >= 1");
  VinogradovConstants v;
  v.delta = 0.5 * m * (m + 1) * (1.0 - std::pow(1.0 - 1.0 / m, tau));
  double mt = static_cast<double>(m) * tau;
  v.log_c = 6.0 * mt * std::log(mt) + 4.0 * m * (m + 1) * tau * std::log(2.0 * m);
  return v;
}

EnvelopeReport verify_theorem7(std::span<const int> P_grid, int m, int tau) {
  auto consts = vinogradov_constants(m, tau);
  int k = m * tau;
  EnvelopeReport rep;
  rep.suite = "vinogradov-theorem7";
  rep.abscissa_name = "P";
  rep.extra_columns = {"count", "log_count", "diagonal_ok"};
  std::vector<double> lx, ly;
  bool diag_ok = true;
  for (int P : P_grid) {
    auto cnt = jk_count(P, m, k, CountMethod::signature_histogram);
    double lj = std::log(static_cast<double>(cnt.count));
    double stat = lj - (2.0 * k - consts.delta) * std::log(static_cast<double>(P)) - consts.log_c;
    bool diag = static_cast<double>(cnt.count) >= ipow(P, k);
    diag_ok = diag_ok && diag;
    rep.add_decided(P, stat, std::nullopt, 0.0, stat <= 0.0 && diag,
                    {static_cast<double>(cnt.count), lj, diag ? 1.0 : 0.0});
    if (P >= 2) {
      lx.push_back(std::log(static_cast<double>(P)));
      ly.push_back(lj);
    }
  }
  rep.set_metric("k", k);
  rep.set_metric("delta", consts.delta);
  rep.set_metric("log_c_tau", consts.log_c);
  rep.set_metric("diagonal_ok", diag_ok ? 1.0 : 0.0);
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    rep.set_metric("fitted_slope", sxy / sxx);
  }
  return rep;
}

double CoefficientBox::half_width(int j) const { return std::pow(P, j - 1); }

double CoefficientBox::log_volume() const {
  return m * std::log(2.0) + 0.5 * m * (m - 1) * std::log(P);
}

double CoefficientBox::log_prefactor() const { return -0.5 * m * (m - 1) * std::log(P); }

std::optional<std::complex<double>> exact_inner_expectation(const Distribution& S, double P,
                                                            const VinogradovPolynomial& f) {
  IkOptions opt;
  if (!(S.atoms() && S.atoms()->size() <= kMaxExactAtoms) && !S.uniform_density()) return std::nullopt;
  auto ev = make_inner(S, P, opt);
  return ev.eval(f.coeffs());
}

CostEstimate ik_cost(const Distribution& S, double P, int m, int k, const IkOptions& options) {
  check_ik_args(P, m, k, options);
  return ik_cost_impl(S, P, m, k, options, nullptr);
}

MeanValueEstimate ik_estimate(const Distribution& S, double P, int m, int k, const IkOptions& opt) {
  check_ik_args(P, m, k, opt);
  MeanValueEstimate est;
  est.P = P;
  est.m = m;
  est.k = k;
  CoefficientBox box{m, P};

  if (opt.method == IkMethod::unit_cell_quadrature) {
    CostEstimate c = ik_cost_impl(S, P, m, k, opt, nullptr);
    if (!c.feasible) throw Infeasible("ik_estimate: unit-cell grid too large", c);
    std::vector<long long> xs;
    std::vector<double> w;
    for (const auto& a : active_atoms(*S.atoms(), P)) {
      xs.push_back(static_cast<long long>(a.x));
      w.push_back(a.p);
    }
    est.inner = "exact";
    est.n_mc = 0;
    if (xs.empty()) return est;
    auto cell = cell_integral_checked(xs, w, m, k, opt.quadrature_tol);
    // Integer atoms make the integrand 1-periodic in every alpha_j and each
    // box side has even integer length, so the box integral is volume times
    // the unit-cell integral and prefactor * volume = 2^m.
    est.value = std::ldexp(cell.value, m);
    est.converged = cell.converged;
    return est;
  }

  InnerEvaluator ev = make_inner(S, P, opt);
  CostEstimate c = ik_cost_impl(S, P, m, k, opt, &ev);
  if (!c.feasible) throw Infeasible("ik_estimate: " + c.detail + " exceeds the work limit", c);
  est.inner = ev.kind == InnerEvaluator::Kind::atoms     ? "exact"
              : ev.kind == InnerEvaluator::Kind::uniform ? "quadrature"
                                                         : "monte_carlo";
  est.n_mc = opt.n_mc;
  const bool split = ev.kind == InnerEvaluator::Kind::sample;
  std::vector<double> scales;
  if (opt.method == IkMethod::importance) scales = importance_scales(S, P, m, opt.importance_scale);

  // One stratum for plain and importance sampling, 2^m sign strata otherwise.
  const std::size_t strata = opt.method == IkMethod::box_stratified ? (std::size_t{1} << m) : 1;
  std::vector<std::size_t> per_stratum(strata);
  for (std::size_t s = 0; s < strata; ++s) per_stratum[s] = (s + 1) * opt.n_mc / strata - s * opt.n_mc / strata;

  std::vector<Chunking> chunkings(strata);
  std::vector<std::size_t> offsets(strata + 1, 0);
  for (std::size_t s = 0; s < strata; ++s) {
    chunkings[s] = make_chunking(per_stratum[s]);
    offsets[s + 1] = offsets[s] + chunkings[s].chunks;
  }
  std::vector<double> sums(offsets[strata], 0.0), sums_half(offsets[strata], 0.0);
  std::vector<std::size_t> counts(offsets[strata], 0);

  const double log_pref = box.log_prefactor();
  parallel_for(offsets[strata], [&](std::size_t slot) {
    std::size_t s = std::upper_bound(offsets.begin(), offsets.end(), slot) - offsets.begin() - 1;
    std::size_t c_idx = slot - offsets[s];
    const auto& ch = chunkings[s];
    Rng rng = make_rng(derive_seed(opt.seed, {s, c_idx}));
    std::vector<double> alpha(m);
    double acc = 0.0, acc_half = 0.0;
    for (std::size_t i = ch.begin(c_idx); i < ch.end(c_idx); ++i) {
      double weight = 1.0;
      double log_weight = 0.0;
      for (int j = 1; j <= m; ++j) {
        double B = box.half_width(j);
        switch (opt.method) {
          case IkMethod::box_plain:
            alpha[j - 1] = (2.0 * uniform01(rng) - 1.0) * B;
            break;
          case IkMethod::box_stratified: {
            double sign = ((s >> (j - 1)) & 1U) ? -1.0 : 1.0;
            alpha[j - 1] = sign * uniform01(rng) * B;
            break;
          }
          case IkMethod::importance: {
            TruncCauchy tc(scales[j - 1], B);
            alpha[j - 1] = tc.draw(rng);
            log_weight -= std::log(tc.pdf(alpha[j - 1]));
            break;
          }
          case IkMethod::unit_cell_quadrature:
            break;
        }
      }
      if (opt.method == IkMethod::importance) weight = std::exp(log_weight + log_pref);
      double g;
      if (split) {
        auto [a, b] = ev.eval_halves(alpha, ev.split_index);
        auto full = (a * static_cast<double>(ev.n_draws / 2) + b * static_cast<double>(ev.n_draws - ev.n_draws / 2)) /
                    static_cast<double>(ev.n_draws);
        g = std::pow(std::norm(full), k);
        acc_half += weight * 0.5 * (std::pow(std::norm(a), k) + std::pow(std::norm(b), k));
      } else {
        g = std::pow(std::norm(ev.eval(alpha)), k);
      }
      acc += weight * g;
    }
    sums[slot] = acc;
    sums_half[slot] = acc_half;
    counts[slot] = ch.end(c_idx) - ch.begin(c_idx);
  });

  // Plain: I = 2^m mean. Stratified: I = sum of stratum means (each orthant
  // has volume 2^{-m} of the box). Importance: I = mean of prefactor * g / q.
  const double stratum_scale = opt.method == IkMethod::box_plain ? std::ldexp(1.0, m) : 1.0;
  double value = 0.0, var = 0.0, value_half = 0.0;
  for (std::size_t s = 0; s < strata; ++s) {
    std::span<const double> bs(sums.data() + offsets[s], offsets[s + 1] - offsets[s]);
    std::span<const double> bh(sums_half.data() + offsets[s], offsets[s + 1] - offsets[s]);
    std::span<const std::size_t> bc(counts.data() + offsets[s], offsets[s + 1] - offsets[s]);
    RealEstimate r = jackknife_mean(bs, bc);
    value += stratum_scale * r.value;
    var += stratum_scale * stratum_scale * r.std_error * r.std_error;
    if (split) value_half += stratum_scale * jackknife_mean(bh, bc).value;
  }
  est.value = std::max(0.0, value);
  est.std_error = std::sqrt(var);
  if (split) est.bias_estimate = value_half - value;
  if (opt.target_rel_se && est.value > 0.0) est.precise = est.std_error <= *opt.target_rel_se * est.value;
  if (opt.target_rel_se && est.value == 0.0) est.precise = false;
  return est;
}

double concentration_sup(const Distribution& S, ConcentrationMethod method, std::size_t n, std::uint64_t seed) {
  if (method == ConcentrationMethod::exact) {
    if (auto q = S.unit_concentration()) return *q;
    if (S.atoms()) return atoms_unit_concentration(*S.atoms());
    throw InvalidInput("concentration_sup: exact method needs atoms or a known concentration");
  }
  if (n < 1) throw InvalidInput("concentration_sup: empirical method needs n >= 1");
  auto xs = S.sample(n, seed);
  std::sort(xs.begin(), xs.end());
  // Windows (x_j - 1, x_j]; a maximizing window can always be slid right
  // until its closed endpoint hits a sample point.
  std::size_t best = 0, lo = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    while (xs[lo] <= xs[j] - 1.0) ++lo;
    best = std::max(best, j - lo + 1);
  }
  return static_cast<double>(best) / static_cast<double>(xs.size());
}

namespace {

double law_concentration(const Distribution& S, std::uint64_t seed) {
  if (S.unit_concentration() || S.atoms()) return concentration_sup(S, ConcentrationMethod::exact);
  return concentration_sup(S, ConcentrationMethod::empirical, 1'000'000, seed);
}

EnvelopeReport ratio_report(const std::string& suite, const LawFamily& S, std::span<const double> P_grid, int m,
                            int k, const IkOptions& options, const std::function<double(double)>& log_scale) {
  if (P_grid.empty()) throw InvalidInput(suite + ": empty P grid");
  EnvelopeReport rep;
  rep.suite = suite;
  rep.abscissa_name = "P";
  rep.extra_columns = {"estimate", "std_error", "concentration", "log_ratio"};
  std::vector<double> ratios;
  double first = 0.0;
  for (std::size_t i = 0; i < P_grid.size(); ++i) {
    double P = P_grid[i];
    Distribution law = S(P);
    IkOptions opt = options;
    opt.seed = derive_seed(options.seed, {i});
    auto est = ik_estimate(law, P, m, k, opt);
    double Q = law_concentration(law, derive_seed(options.seed, {i, 1}));
    double log_ratio = std::log(est.value) - log_scale(P) - 2.0 * k * std::log(Q);
    double ratio = std::exp(log_ratio);
    if (i == 0) first = ratio;
    bool ok = std::isfinite(log_ratio) && est.converged && ratio <= 10.0 * first;
    rep.add_decided(P, ratio, std::nullopt, 10.0 * first, ok, {est.value, est.std_error, Q, log_ratio});
    ratios.push_back(ratio);
    if (!est.converged) rep.notes.push_back("quadrature not converged at P=" + format_number(P));
  }
  double worst = 1.0;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    double f = ratios[i] / ratios[i - 1];
    worst = std::max(worst, std::max(f, 1.0 / f));
  }
  rep.set_metric("m", m);
  rep.set_metric("k", k);
  rep.set_metric("max_step_factor", worst);
  rep.set_metric("ratio_at_min_P", first);
  rep.notes.push_back("the constant is not specified; pass means the ratio stays finite and below 10x its first value");
  return rep;
}

}  // namespace

EnvelopeReport verify_theorem8(const LawFamily& S, std::span<const double> P_grid, int m, int tau,
                               const IkOptions& options) {
  auto consts = vinogradov_constants(m, tau);
  int k = m * tau;
  auto rep = ratio_report("vinogradov-theorem8", S, P_grid, m, k, options,
                          [&](double P) { return (2.0 * k - consts.delta) * std::log(P); });
  rep.set_metric("delta", consts.delta);
  return rep;
}

double theorem9_log_bound(double P, int m, int b) {
  return (5.0 * m * m + m) * std::log(2.0) - m * m * std::log(P) - std::log1p(-m / (2.0 * b));
}

EnvelopeReport verify_theorem9(double P, int m, int b, const IkOptions& options) {
  if (!(P >= 32.0)) throw InvalidInput("verify_theorem9: P must be >= 32");
  if (m < 1) throw InvalidInput("verify_theorem9: m must be >= 1");
  if (2 * b < m + 1) throw InvalidInput("verify_theorem9: b must be >= (m+1)/2");
  int k = b * m;
  auto est = ik_estimate(laws::uniform(-P, P), P, m, k, options);
  double bound = std::exp(theorem9_log_bound(P, m, b));
  double trivial = std::ldexp(1.0, m);
  EnvelopeReport rep;
  rep.suite = "vinogradov-theorem9";
  rep.abscissa_name = "P";
  rep.extra_columns = {"std_error", "rel_se", "trivial_bound"};
  double rel = est.value > 0 ? est.std_error / est.value : INFINITY;
  bool ok = est.value + 3.0 * est.std_error <= bound && est.value <= trivial + 3.0 * est.std_error;
  rep.add_decided(P, est.value, std::nullopt, bound, ok, {est.std_error, rel, trivial});
  rep.set_metric("m", m);
  rep.set_metric("k", k);
  rep.set_metric("bound", bound);
  rep.set_metric("estimate", est.value);
  rep.set_metric("std_error", est.std_error);
  rep.set_metric("rel_se", rel);
  rep.set_metric("margin_in_se", est.std_error > 0 ? (bound - est.value) / est.std_error : INFINITY);
  if (!est.precise) rep.notes.push_back("relative standard error above the requested target");
  return rep;
}

EnvelopeReport verify_theorem10(const LawFamily& S, std::span<const double> P_grid, int m, int k,
                                const IkOptions& options) {
  if (k < 1 || k > m) throw InvalidInput("verify_theorem10: need 1 <= k <= m");
  return ratio_report("vinogradov-theorem10", S, P_grid, m, k, options,
                      [&](double P) { return 0.5 * (3.0 * k - 1.0) * std::log(P); });
}

double jk_by_integral(int P, int m, int k, bool* converged) {
  check_count_args(P, m, k);
  std::vector<long long> xs;
  for (long long x = 1; x <= P; ++x) xs.push_back(x);
  std::vector<double> w(xs.size(), 1.0);
  CostEstimate c;
  c.operations = cell_points(xs, m, k) * xs.size();
  c.seconds = c.operations * kSecondsPerOp;
  c.feasible = c.operations <= kMaxOperations;
  if (!c.feasible) throw Infeasible("jk_by_integral: grid too large", c);
  auto r = cell_integral_checked(xs, w, m, k, 1e-9);
  if (converged) *converged = r.converged;
  return r.value;
}

EnvelopeReport remark3_check(int P, int m, int k) {
  check_count_args(P, m, k);
  IkOptions opt;
  opt.method = IkMethod::unit_cell_quadrature;
  auto est = ik_estimate(laws::lattice_uniform(1, P), P, m, k, opt);
  auto cnt = jk_count(P, m, k, CountMethod::signature_histogram);
  double target = std::ldexp(1.0, m) * std::pow(static_cast<double>(P), -2.0 * k) * static_cast<double>(cnt.count);
  double gap = std::abs(est.value - target) / target;
  EnvelopeReport rep;
  rep.suite = "vinogradov-remark3";
  rep.abscissa_name = "P";
  rep.extra_columns = {"identity_value", "relative_gap", "count"};
  rep.add_decided(P, est.value, target * (1 - 1e-6), target * (1 + 1e-6), gap <= 1e-6 && est.converged,
                  {target, gap, static_cast<double>(cnt.count)});
  rep.set_metric("m", m);
  rep.set_metric("k", k);
  rep.set_metric("relative_gap", gap);
  if (!est.converged) rep.notes.push_back("unit-cell quadrature did not converge");
  return rep;
}

}  // namespace polyrand::vinogradov
