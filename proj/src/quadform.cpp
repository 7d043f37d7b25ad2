#include "polyrand/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "polyrand/error.hpp"
#include "polyrand/estimate.hpp"
#include "polyrand/numerics.hpp"
#include "polyrand/parallel.hpp"
#include "polyrand/rng.hpp"

namespace polyrand::quadform {

namespace {

using cplx = std::complex<double>;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Coordinates with sigma_j^2 below this fraction of sigma_1^2 enter through their mean.
constexpr double kFoldRel = 1e-13;

double coord(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }

// Squared-norm law as a list of (variance, multiplicity, shift energy)
// groups plus a constant from folded coordinates.
struct Term {
  double var;
  double mult;
  double shift_sq;
};

struct Expansion {
  std::vector<Term> terms;
  double fold_mean = 0.0;
  double sigma1_sq = 1.0;
  double c_max = 0.5;

  cplx K(cplx z) const {
    cplx acc = fold_mean * z;
    for (const auto& t : terms) {
      cplx d = 1.0 - 2.0 * t.var * z;
      acc += -0.5 * t.mult * std::log(d) + t.shift_sq * z / d;
    }
    return acc;
  }
  double K(double c) const {
    double acc = fold_mean * c;
    for (const auto& t : terms) {
      double d = 1.0 - 2.0 * t.var * c;
      acc += -0.5 * t.mult * std::log(d) + t.shift_sq * c / d;
    }
    return acc;
  }
  double K1(double c) const {
    double acc = fold_mean;
    for (const auto& t : terms) {
      double d = 1.0 - 2.0 * t.var * c;
      acc += t.mult * t.var / d + t.shift_sq / (d * d);
    }
    return acc;
  }
  double K2(double c) const {
    double acc = 0.0;
    for (const auto& t : terms) {
      double d = 1.0 - 2.0 * t.var * c;
      acc += 2.0 * t.mult * t.var * t.var / (d * d) + 4.0 * t.var * t.shift_sq / (d * d * d);
    }
    return acc;
  }
  double mean() const { return K1(0.0); }
  double variance() const { return K2(0.0); }
  double c_of_s(double s) const { return (1.0 - s) / (2.0 * sigma1_sq); }
};

// Tail coordinates (variance, shift^2) in order, the continuation generated
// until its variances fall below the fold threshold; `rest_*` carry the
// closed-form remainder of the continuation.
struct TailList {
  std::vector<std::pair<double, double>> coords;
  double rest_var = 0.0;
  double rest_shift = 0.0;
};

TailList tail_list(const HilbertGaussianSpec& s, double stop_rel) {
  TailList out;
  for (std::size_t j = 0; j < s.tail_variances.size(); ++j)
    out.coords.emplace_back(s.tail_variances[j], coord(s.tail_shift, j) * coord(s.tail_shift, j));
  if (s.continuation) {
    const double rho = s.continuation->ratio;
    const double base = s.tail_variances.back();
    const double energy = s.continuation->shift_sq_total;
    double v = base * rho;
    double a = energy * (1.0 - rho);
    while (v >= stop_rel * s.head_variance || a >= stop_rel * s.head_variance) {
      out.coords.emplace_back(v, a);
      v *= rho;
      a *= rho;
    }
    out.rest_var = v / (1.0 - rho);
    out.rest_shift = a / (1.0 - rho);
  }
  return out;
}

Expansion expand(const HilbertGaussianSpec& s) {
  s.validate();
  Expansion e;
  e.sigma1_sq = s.head_variance;
  e.c_max = 0.5 / s.head_variance;
  e.terms.push_back({s.head_variance, static_cast<double>(s.k), s.head_shift_sq()});
  auto tail = tail_list(s, kFoldRel);
  for (auto [v, a] : tail.coords) {
    if (v < kFoldRel * s.head_variance)
      e.fold_mean += v + a;
    else
      e.terms.push_back({v, 1.0, a});
  }
  e.fold_mean += tail.rest_var + tail.rest_shift;
  return e;
}

// c with K'(c) = x, written through s = 1 - 2 sigma_1^2 c > 0.
double saddle_density(const Expansion& e, double x) {
  auto g = [&](double log_s) { return e.K1(e.c_of_s(std::exp(log_s))) - x; };
  double lo = 0.0, hi = 0.0;
  if (g(0.0) > 0.0) {
    lo = 0.0;
    hi = 1.0;
    while (g(hi) > 0.0) hi *= 2.0;
  } else {
    hi = 0.0;
    lo = -1.0;
    while (g(lo) < 0.0) lo *= 2.0;
  }
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return e.c_of_s(std::exp(0.5 * (r.first + r.second)));
}

// c in (0, c_max) with K'(c) - 1/c = x.
double saddle_survival(const Expansion& e, double x) {
  auto h = [&](double s) {
    double c = e.c_of_s(s);
    return e.K1(c) - 1.0 / c - x;
  };
  double lo = 0.5, hi = 0.5;
  while (h(lo) < 0.0) lo *= 0.5;
  while (h(hi) > 0.0) hi = 1.0 - 0.5 * (1.0 - hi);
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(h, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return e.c_of_s(0.5 * (r.first + r.second));
}

struct Inversion {
  double log_prefactor = 0.0;
  double integral = 0.0;
  double error = 0.0;
  bool converged = true;
};

// (1/pi) int_0^inf Re[exp(K(c+iy) - K(c) - iyx) h(c+iy)] dy with h = 1 (density)
// or 1/z (survival). A finite head interval is integrated adaptively; the
// oscillatory remainder is split at half periods of exp(-iyx) and the partial
// sums are accelerated with Wynn's epsilon algorithm.
Inversion bromwich(const Expansion& e, double c, double x, bool survival, double rel_tol) {
  const double Kc = e.K(c);
  auto f = [&](double y) {
    cplx z(c, y);
    cplx v = std::exp(e.K(z) - Kc - cplx(0.0, y * x));
    if (survival) v /= z;
    return v.real() / std::numbers::pi;
  };
  double curv = e.K2(c) + (survival ? 1.0 / (c * c) : 0.0);
  double w = 1.0 / std::sqrt(curv);
  double freq = std::max(x - e.fold_mean, 1e-300);
  double half = std::numbers::pi / freq;
  double y0 = std::max(40.0 * w, 4.0 * half);
  Inversion out;
  out.log_prefactor = Kc - c * x;
  auto head = numerics::integrate(f, 0.0, y0, rel_tol, 18);
  double total = head.value;
  double err = head.error;
  bool ok = head.converged;

  numerics::WynnEpsilon wynn;
  double partial = total;
  double est = total, prev_est = total;
  int stable = 0;
  const std::size_t max_panels = 20000;
  std::size_t p = 0;
  double tail_mag = 0.0;
  for (; p < max_panels; ++p) {
    double a = y0 + p * half;
    auto piece = numerics::integrate(f, a, a + half, rel_tol, 12);
    partial += piece.value;
    err += piece.error;
    tail_mag = std::abs(piece.value);
    prev_est = est;
    est = wynn.push(partial);
    double scale = std::max(std::abs(est), 1e-300);
    if (p >= 8 && (std::abs(est - prev_est) <= rel_tol * scale || tail_mag <= 1e-3 * rel_tol * scale)) {
      if (++stable >= 3) break;
    } else {
      stable = 0;
    }
  }
  if (p == max_panels) ok = false;
  double wynn_err = std::max(std::abs(est - prev_est), wynn.error());
  out.integral = est;
  out.error = err + wynn_err;
  double scale = std::abs(est);
  if (!(scale > 0.0) || out.error > 1e3 * rel_tol * scale + 1e-300) ok = false;
  out.converged = ok && est > 0.0;
  return out;
}

double log_density_inversion(const Expansion& e, double u, double rel_tol, double* rel_err, bool* converged) {
  if (!(u > e.fold_mean)) {
    if (rel_err) *rel_err = 0.0;
    if (converged) *converged = true;
    return kNegInf;
  }
  double c = saddle_density(e, u);
  auto inv = bromwich(e, c, u, false, rel_tol);
  if (rel_err) *rel_err = inv.integral > 0 ? inv.error / inv.integral : INFINITY;
  if (converged) *converged = inv.converged;
  if (!(inv.integral > 0.0)) return kNegInf;
  return inv.log_prefactor + std::log(inv.integral);
}

double log_survival_inversion(const Expansion& e, double x, double rel_tol, double* rel_err, bool* converged) {
  if (!(x > e.fold_mean)) {
    if (rel_err) *rel_err = 0.0;
    if (converged) *converged = true;
    return 0.0;
  }
  double c = saddle_survival(e, x);
  auto inv = bromwich(e, c, x, true, rel_tol);
  if (rel_err) *rel_err = inv.integral > 0 ? inv.error / inv.integral : INFINITY;
  if (converged) *converged = inv.converged;
  if (!(inv.integral > 0.0)) return kNegInf;
  return std::min(0.0, inv.log_prefactor + std::log(inv.integral));
}

// log of min_{0<c<c_max} E exp{c(Q - x)}, a bound on P(Q > x); 0 for x <= mean.
double log_chernoff(const Expansion& e, double x) {
  if (x <= e.mean()) return 0.0;
  double c = saddle_density(e, x);
  return std::min(0.0, e.K(c) - c * x);
}

double kernel4(double x) {
  return 0.5 * (3.0 - x * x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

void HilbertGaussianSpec::validate() const {
  if (!(head_variance > 0.0) || !std::isfinite(head_variance))
    throw InvalidInput("HilbertGaussianSpec: head variance must be positive");
  if (k < 1) throw InvalidInput("HilbertGaussianSpec: multiplicity k must be >= 1");
  if (static_cast<int>(head_shift.size()) > k)
    throw InvalidInput("HilbertGaussianSpec: more head shifts than the multiplicity");
  if (tail_shift.size() > tail_variances.size())
    throw InvalidInput("HilbertGaussianSpec: more tail shifts than tail variances");
  double prev = head_variance;
  for (double v : tail_variances) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("HilbertGaussianSpec: tail variances must be >= 0");
    if (prev == head_variance ? !(v < prev) : !(v <= prev))
      throw InvalidInput("HilbertGaussianSpec: tail variances must be below the head and nonincreasing");
    prev = v;
  }
  for (double a : head_shift)
    if (!std::isfinite(a)) throw InvalidInput("HilbertGaussianSpec: shifts must be finite");
  for (double a : tail_shift)
    if (!std::isfinite(a)) throw InvalidInput("HilbertGaussianSpec: shifts must be finite");
  if (continuation) {
    if (tail_variances.empty())
      throw InvalidInput("HilbertGaussianSpec: a geometric continuation needs an explicit tail variance");
    if (!(continuation->ratio > 0.0 && continuation->ratio < 1.0))
      throw InvalidInput("HilbertGaussianSpec: continuation ratio must be in (0, 1)");
    if (!(continuation->shift_sq_total >= 0.0) || !std::isfinite(continuation->shift_sq_total))
      throw InvalidInput("HilbertGaussianSpec: continuation shift energy must be >= 0");
  }
}

double HilbertGaussianSpec::head_shift_sq(int i) const {
  double s = 0.0;
  for (int j = 0; j < std::min(i, static_cast<int>(head_shift.size())); ++j) s += head_shift[j] * head_shift[j];
  return s;
}

HilbertGaussianSpec HilbertGaussianSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("HilbertGaussianSpec: invalid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw InvalidInput("HilbertGaussianSpec: expected a JSON object");
  static const std::vector<std::string> known = {"head_variance", "multiplicity",  "head_shift",
                                                 "tail_variances", "tail_shift",   "geometric_ratio",
                                                 "continuation_shift_sq", "threshold_uses_head_k"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw InvalidInput("HilbertGaussianSpec: unknown key '" + it.key() + "'");
  HilbertGaussianSpec s;
  try {
    s.head_variance = j.value("head_variance", 1.0);
    s.k = j.value("multiplicity", 1);
    s.head_shift = j.value("head_shift", std::vector<double>{});
    s.tail_variances = j.value("tail_variances", std::vector<double>{});
    s.tail_shift = j.value("tail_shift", std::vector<double>{});
    if (j.contains("geometric_ratio"))
      s.continuation = GeometricContinuation{j.at("geometric_ratio").get<double>(),
                                             j.value("continuation_shift_sq", 0.0)};
    else if (j.contains("continuation_shift_sq"))
      throw InvalidInput("HilbertGaussianSpec: continuation_shift_sq needs geometric_ratio");
    s.threshold_uses_head_k = j.value("threshold_uses_head_k", false);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("HilbertGaussianSpec: bad field type: ") + ex.what());
  }
  s.validate();
  return s;
}

std::string HilbertGaussianSpec::to_json() const {
  nlohmann::ordered_json j;
  j["head_variance"] = head_variance;
  j["multiplicity"] = k;
  j["head_shift"] = head_shift;
  j["tail_variances"] = tail_variances;
  j["tail_shift"] = tail_shift;
  if (continuation) {
    j["geometric_ratio"] = continuation->ratio;
    j["continuation_shift_sq"] = continuation->shift_sq_total;
  }
  j["threshold_uses_head_k"] = threshold_uses_head_k;
  return j.dump();
}

double log_noncentral_fk(double u, int k, double sigma1_sq, double lambda) {
  if (!(u >= 0.0)) throw InvalidInput("noncentral_fk: u must be >= 0");
  if (k < 1) throw InvalidInput("noncentral_fk: k must be >= 1");
  if (!(sigma1_sq > 0.0)) throw InvalidInput("noncentral_fk: variance must be positive");
  if (!(lambda >= 0.0)) throw InvalidInput("noncentral_fk: lambda must be >= 0");
  const double x = u / sigma1_sq;
  const double nu = lambda / sigma1_sq;
  const double half_k = 0.5 * k;
  const double scale = -std::log(sigma1_sq);
  if (x == 0.0) {
    if (k == 1) return INFINITY;
    if (k > 2) return kNegInf;
    return scale - std::log(2.0) - 0.5 * nu;
  }
  // log of the chi-square density with d = k + 2i degrees of freedom.
  auto log_chi = [&](double i) {
    double hd = half_k + i;
    return (hd - 1.0) * std::log(x) - 0.5 * x - hd * std::log(2.0) - std::lgamma(hd);
  };
  if (nu == 0.0) return scale + log_chi(0.0);
  auto log_term = [&](double i) {
    return -0.5 * nu + i * std::log(0.5 * nu) - std::lgamma(i + 1.0) + log_chi(i);
  };
  // Ratio of consecutive Poisson-mixture terms: nu x / (4 (i+1)(k/2+i)),
  // decreasing in i, so both directions from the mode are dominated by
  // geometric series.
  auto ratio = [&](double i) { return nu * x / (4.0 * (i + 1.0) * (half_k + i)); };
  double mode = std::floor(std::max(0.0, 0.5 * std::sqrt(nu * x) - 0.5 * half_k));
  while (mode > 0 && ratio(mode - 1.0) < 1.0) mode -= 1.0;
  while (ratio(mode) > 1.0) mode += 1.0;
  const double lead = log_term(mode);
  const double eps = 1e-17;
  double sum = 1.0;
  double t = 1.0;
  for (double i = mode; ; i += 1.0) {
    double r = ratio(i);
    t *= r;
    sum += t;
    if (r < 1.0 && t * r / (1.0 - r) < eps * sum) break;
  }
  t = 1.0;
  for (double i = mode; i > 0.0; i -= 1.0) {
    double r = 1.0 / ratio(i - 1.0);  // term(i-1)/term(i)
    t *= r;
    sum += t;
    if (r < 1.0 && t * r / (1.0 - r) < eps * sum) break;
  }
  return scale + lead + std::log(sum);
}

double noncentral_fk(double u, int k, double sigma1_sq, double lambda) {
  return std::exp(log_noncentral_fk(u, k, sigma1_sq, lambda));
}

double fk_bound_constant(int k) {
  double h = 0.5 * (k - 1);
  return 1.0 / std::sqrt(std::numbers::pi) + std::pow(h, h) / std::tgamma(0.5 * k);
}

FkBounds fk_upper_bounds(double u, int k, double sigma1_sq, double head_norm) {
  if (!(u > 0.0)) throw InvalidInput("fk_upper_bounds: u must be > 0");
  if (k < 1) throw InvalidInput("fk_upper_bounds: k must be >= 1");
  if (!(sigma1_sq > 0.0)) throw InvalidInput("fk_upper_bounds: variance must be positive");
  if (!(head_norm >= 0.0)) throw InvalidInput("fk_upper_bounds: |a_k| must be >= 0");
  double gap = std::sqrt(u) - head_norm;
  double expo = -gap * gap / (2.0 * sigma1_sq);
  FkBounds b;
  b.log_bound_a = -std::log(2.0 * sigma1_sq) - std::lgamma(0.5 * k) +
                  (0.5 * k - 1.0) * std::log(u / (2.0 * sigma1_sq)) + expo;
  b.bound_a = std::exp(b.log_bound_a);
  if (head_norm > 0.0) {
    double lb = std::log(fk_bound_constant(k)) - 0.5 * std::log(sigma1_sq) + 0.25 * (k - 3) * std::log(u) -
                0.5 * (k - 1) * std::log(head_norm) + expo;
    b.log_bound_b = lb;
    b.bound_b = std::exp(lb);
  }
  return b;
}

TailFunctionals tilt_weight(const HilbertGaussianSpec& spec, double tol) {
  spec.validate();
  const double s1 = spec.head_variance;
  TailFunctionals out;
  // Continuation coordinates are generated until their variances and shift
  // energies drop below tol * sigma_1^2; the rest is summed in closed form.
  auto tail = tail_list(spec, std::max(tol, 1e-300));
  double log_w = 0.0;
  double er = 0.0;
  for (auto [v, a] : tail.coords) {
    double x = v / s1;
    log_w += -0.5 * std::log1p(-x) + a / (2.0 * (s1 - v));
    er += v + a;
    ++out.terms_used;
  }
  if (spec.continuation) {
    // Remaining factors have x <= tol, so -log(1-x)/2 = x/2 + O(tol^2).
    log_w += 0.5 * tail.rest_var / s1 + tail.rest_shift / (2.0 * s1);
    er += tail.rest_var + tail.rest_shift;
  }
  out.ER = er;
  out.log_W = log_w;
  out.W = std::exp(log_w);
  double s_next = spec.tail_variances.empty() ? 0.0 : spec.tail_variances.front();
  out.u0 = 2.0 * spec.k * std::pow(1.0 - s_next / s1, -2.0) * er;
  const double a3 = spec.head_shift_sq(3);
  const double ak = spec.head_shift_sq();
  const double u0 = out.u0;
  if (spec.k == 3) out.u_star = 4.9 * u0 + 16.94 * a3 / (s1 * s1) * u0 * u0;
  if (spec.k >= 4) {
    double km = spec.k;
    double base = 5.625 * (km - 1) * (km - 1) / (km - 3) * u0;
    out.u_double_star = base + 16.0 * a3 / (s1 * s1) * u0 * u0 / ((km - 3) * (km - 3));
    out.u_double_star_head_k = base + 16.0 * ak / (s1 * s1) * u0 * u0 / ((km - 3) * (km - 3));
  }
  return out;
}

std::vector<double> sample_norm_sq(const HilbertGaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  Expansion e = expand(spec);
  // Coordinate list: head coordinates individually, tail groups have mult 1.
  std::vector<std::pair<double, double>> coords;  // (sd, shift)
  const double sd1 = std::sqrt(spec.head_variance);
  for (int i = 0; i < spec.k; ++i) coords.emplace_back(sd1, coord(spec.head_shift, i));
  for (std::size_t t = 1; t < e.terms.size(); ++t)
    coords.emplace_back(std::sqrt(e.terms[t].var), std::sqrt(e.terms[t].shift_sq));
  std::vector<double> out(n);
  auto ch = make_chunking(n);
  parallel_for(ch.chunks, [&](std::size_t c) {
    Rng rng = make_rng(derive_seed(seed, {c}));
    std::normal_distribution<double> z;
    for (std::size_t i = ch.begin(c); i < ch.end(c); ++i) {
      double s = e.fold_mean;
      for (auto [sd, a] : coords) {
        double d = sd * z(rng) - a;
        s += d * d;
      }
      out[i] = s;
    }
  });
  return out;
}

std::vector<DensityResult> density_kde_grid(const HilbertGaussianSpec& spec, std::span<const double> u,
                                            const DensityParams& params) {
  if (params.n_mc < 1000) throw InvalidInput("density_p: mc_kde needs n_mc >= 1000");
  Expansion e = expand(spec);
  auto xs = sample_norm_sq(spec, params.n_mc, params.seed);
  const double n = static_cast<double>(xs.size());
  double h = params.bandwidth > 0.0 ? params.bandwidth : std::sqrt(e.variance()) * std::pow(n, -1.0 / 9.0);
  auto ch = make_chunking(xs.size());
  std::vector<DensityResult> out;
  for (double point : u) {
    // Block sums for h and 2h; each block is a contiguous slice of the sample.
    std::vector<double> s1(ch.chunks), s2(ch.chunks);
    std::vector<std::size_t> cnt(ch.chunks);
    parallel_for(ch.chunks, [&](std::size_t c) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = ch.begin(c); i < ch.end(c); ++i) {
        double d = point - xs[i];
        if (std::abs(d) > 20.0 * h) continue;
        a += kernel4(d / h) / h;
        b += kernel4(d / (2.0 * h)) / (2.0 * h);
      }
      s1[c] = a;
      s2[c] = b;
      cnt[c] = ch.end(c) - ch.begin(c);
    });
    auto r1 = jackknife_mean(s1, cnt);
    auto r2 = jackknife_mean(s2, cnt);
    DensityResult d;
    d.value = r1.value;
    d.bias_estimate = (r2.value - r1.value) / 15.0;
    d.error = std::hypot(r1.std_error, *d.bias_estimate);
    d.log_value = d.value > 0 ? std::log(d.value) : kNegInf;
    d.rel_error = d.value > 0 ? d.error / d.value : INFINITY;
    out.push_back(d);
  }
  return out;
}

DensityResult density_p(const HilbertGaussianSpec& spec, double u, DensityMethod method,
                        const DensityParams& params) {
  if (!(u > 0.0)) throw InvalidInput("density_p: u must be > 0");
  if (method == DensityMethod::mc_kde) {
    double pt[1] = {u};
    return density_kde_grid(spec, pt, params)[0];
  }
  Expansion e = expand(spec);
  DensityResult d;
  d.log_value = log_density_inversion(e, u, params.rel_tol, &d.rel_error, &d.converged);
  d.value = std::exp(d.log_value);
  d.error = d.value * d.rel_error;
  return d;
}

TailResult tail_prob(const HilbertGaussianSpec& spec, double r, TailMethod method, const DensityParams& params) {
  if (!(r > 0.0)) throw InvalidInput("tail_prob: r must be > 0");
  const double x = r * r;
  Expansion e = expand(spec);
  TailResult out;
  if (method == TailMethod::mc) {
    if (params.n_mc < 2) throw InvalidInput("tail_prob: n_mc must be >= 2");
    auto xs = sample_norm_sq(spec, params.n_mc, params.seed);
    std::size_t hits = std::count_if(xs.begin(), xs.end(), [&](double v) { return v > x; });
    double n = static_cast<double>(xs.size());
    out.value = hits / n;
    out.error = std::sqrt(out.value * (1.0 - out.value) / n);
    out.log_value = hits ? std::log(out.value) : kNegInf;
    out.rel_error = hits ? out.error / out.value : INFINITY;
    return out;
  }
  if (method == TailMethod::survival_inversion) {
    double rel = 0.0;
    out.log_value = log_survival_inversion(e, x, params.rel_tol, &rel, &out.converged);
    out.value = std::exp(out.log_value);
    out.error = out.value * rel;
    out.rel_error = rel;
    return out;
  }
  // integrate_p: pieces of length 8 sigma_1^2 (about four e-folds of the
  // density far out), relative to a reference log-density.
  if (!(x > e.fold_mean)) {
    out.value = 1.0;
    out.log_value = 0.0;
    return out;
  }
  double ref = log_density_inversion(e, x, params.rel_tol, nullptr, nullptr);
  double mean = e.mean();
  if (mean > x) ref = std::max(ref, log_density_inversion(e, mean, params.rel_tol, nullptr, nullptr));
  if (!std::isfinite(ref)) {
    out.converged = false;
    out.log_value = kNegInf;
    return out;
  }
  bool ok = true;
  double worst_rel = 0.0;
  auto f = [&](double v) {
    double rel = 0.0;
    bool conv = true;
    double lp = log_density_inversion(e, v, params.rel_tol, &rel, &conv);
    if (!conv) ok = false;
    worst_rel = std::max(worst_rel, rel);
    return std::exp(lp - ref);
  };
  const double L = 8.0 * e.sigma1_sq;
  double cum = 0.0, qerr = 0.0, rem_log = 0.0;
  double a = x;
  const int max_pieces = 100000;
  int piece = 0;
  for (; piece < max_pieces; ++piece) {
    auto q = numerics::integrate(f, a, a + L, 1e-10, 12);
    cum += q.value;
    qerr += q.error;
    if (!q.converged) ok = false;
    a += L;
    rem_log = log_chernoff(e, a);
    if (cum > 0.0 && rem_log - ref < std::log(1e-12 * cum)) break;
  }
  if (piece == max_pieces) ok = false;
  out.remainder_bound = std::exp(rem_log);
  out.log_value = ref + std::log(cum);
  out.value = std::exp(out.log_value);
  out.rel_error = qerr / cum + worst_rel + std::exp(rem_log - ref) / cum;
  out.error = out.value * out.rel_error;
  out.converged = ok;
  return out;
}

EnvelopeReport verify_theorem15(const HilbertGaussianSpec& spec, std::span<const double> u_grid,
                                const Theorem15Options& options) {
  spec.validate();
  if (spec.k < 3) throw InvalidInput("verify_theorem15: k must be >= 3");
  auto tf = tilt_weight(spec);
  Expansion e = expand(spec);
  const double lambda = spec.head_shift_sq();
  std::optional<double> threshold;
  if (spec.k == 3) threshold = tf.u_star;
  else threshold = spec.threshold_uses_head_k ? tf.u_double_star_head_k : tf.u_double_star;

  EnvelopeReport rep;
  rep.suite = "qf-sandwich";
  rep.abscissa_name = "u";
  rep.extra_columns = {"kind", "col_a", "col_b", "col_c"};
  rep.notes.push_back("kind 0: statistic p/(f_k W); columns log_p, log_fk, rel_error");
  rep.notes.push_back("kind 1: inversion vs mc_kde z-score; columns p_inversion, p_mc, combined_error");

  std::vector<double> stats(u_grid.size()), logp(u_grid.size()), logf(u_grid.size()), rels(u_grid.size());
  std::vector<char> conv(u_grid.size(), 1);
  parallel_for(u_grid.size(), [&](std::size_t i) {
    double u = u_grid[i];
    if (!(u > 0.0)) throw InvalidInput("verify_theorem15: grid points must be > 0");
    bool c = true;
    logp[i] = log_density_inversion(e, u, options.density.rel_tol, &rels[i], &c);
    conv[i] = c;
    logf[i] = log_noncentral_fk(u, spec.k, spec.head_variance, lambda);
    stats[i] = std::exp(logp[i] - logf[i] - tf.log_W);
  });
  double lower_min = INFINITY, all_max = -INFINITY;
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    double u = u_grid[i];
    double err = stats[i] * rels[i] + 1e-12;
    bool lower_applies = threshold && u >= *threshold;
    bool ok = conv[i] && std::isfinite(stats[i]) && stats[i] <= 1.0 + 3.0 * err;
    if (lower_applies) {
      ok = ok && stats[i] >= 0.125 - 3.0 * err;
      lower_min = std::min(lower_min, stats[i]);
    }
    all_max = std::max(all_max, stats[i]);
    rep.add_decided(u, stats[i], lower_applies ? std::optional<double>(0.125) : std::nullopt, 1.0, ok,
                    {0.0, logp[i], logf[i], rels[i]});
    if (!conv[i]) rep.notes.push_back("inversion not converged at u=" + format_number(u));
  }
  if (!options.mc_check_points.empty()) {
    DensityParams mp = options.density;
    auto mc = density_kde_grid(spec, options.mc_check_points, mp);
    double worst = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
      double u = options.mc_check_points[i];
      auto inv = density_p(spec, u, DensityMethod::cf_inversion, options.density);
      double comb = std::hypot(inv.error, mc[i].error);
      double z = std::abs(inv.value - mc[i].value) / comb;
      worst = std::max(worst, z);
      rep.add_decided(u, z, std::nullopt, 3.0, z <= 3.0 && inv.converged, {1.0, inv.value, mc[i].value, comb});
    }
    rep.set_metric("mc_max_abs_z", worst);
    rep.set_metric("mc_samples", static_cast<double>(options.density.n_mc));
  }
  rep.set_metric("k", spec.k);
  rep.set_metric("W", tf.W);
  rep.set_metric("ER", tf.ER);
  rep.set_metric("u0", tf.u0);
  if (tf.u_star) rep.set_metric("u_star", *tf.u_star);
  if (tf.u_double_star) rep.set_metric("u_double_star", *tf.u_double_star);
  if (tf.u_double_star_head_k) rep.set_metric("u_double_star_head_k", *tf.u_double_star_head_k);
  if (threshold) rep.set_metric("lower_threshold", *threshold);
  if (std::isfinite(lower_min)) rep.set_metric("min_statistic_lower_range", lower_min);
  rep.set_metric("max_statistic", all_max);
  rep.set_metric("envelope_ratio", 1.0 / 0.125);
  return rep;
}

double theorem16_threshold(const HilbertGaussianSpec& spec) {
  spec.validate();
  if (spec.k < 4) throw InvalidInput("theorem16: k must be >= 4");
  double a = std::sqrt(spec.head_shift_sq());
  if (!(a > 0.0)) throw InvalidInput("theorem16: |a_k| must be > 0");
  auto tf = tilt_weight(spec);
  double uss = spec.threshold_uses_head_k ? *tf.u_double_star_head_k : *tf.u_double_star;
  return spec.head_variance / a + 2.0 * a + std::sqrt(uss);
}

EnvelopeReport verify_theorem16(const HilbertGaussianSpec& spec, std::span<const double> r_grid,
                                const DensityParams& params, TailMethod method) {
  const double r_min = theorem16_threshold(spec);
  auto tf = tilt_weight(spec);
  const double a = std::sqrt(spec.head_shift_sq());
  const double s1 = spec.head_variance;
  const int k = spec.k;
  EnvelopeReport rep;
  rep.suite = "qf-tail";
  rep.abscissa_name = "r";
  rep.extra_columns = {"log_tail", "log_statistic", "rel_error", "statistic_times_W", "inverse_power_statistic"};
  std::vector<double> admissible;
  for (double r : r_grid) {
    if (r > r_min)
      admissible.push_back(r);
    else
      rep.notes.push_back("r=" + format_number(r) + " excluded: not above threshold " + format_number(r_min));
  }
  std::vector<TailResult> tails(admissible.size());
  parallel_for(admissible.size(), [&](std::size_t i) {
    tails[i] = tail_prob(spec, admissible[i], method, params);
  });
  double smin = INFINITY, smax = 0.0, imin = INFINITY, imax = 0.0;
  for (std::size_t i = 0; i < admissible.size(); ++i) {
    double r = admissible[i];
    double g = r - a;
    double log_raw = tails[i].log_value + g * g / (2.0 * s1) + 0.5 * std::log(s1) + 0.5 * (k - 3) * std::log(r) +
                     0.5 * (k - 1) * std::log(a);
    double log_stat = log_raw - tf.log_W;
    double stat = std::exp(log_stat);
    double inv = std::exp(log_stat - (k - 3) * std::log(r));
    bool ok = std::isfinite(log_stat) && stat > 0.0 && tails[i].converged;
    rep.add_decided(r, stat, 0.0, std::nullopt, ok,
                    {tails[i].log_value, log_stat, tails[i].rel_error, std::exp(log_raw), inv});
    if (ok) {
      smin = std::min(smin, stat);
      smax = std::max(smax, stat);
      imin = std::min(imin, inv);
      imax = std::max(imax, inv);
    }
  }
  rep.set_metric("k", k);
  rep.set_metric("r_threshold", r_min);
  rep.set_metric("W", tf.W);
  rep.set_metric("admissible_points", static_cast<double>(admissible.size()));
  if (smax > 0.0) {
    rep.set_metric("min_statistic", smin);
    rep.set_metric("max_statistic", smax);
    rep.set_metric("max_min_ratio", smax / smin);
    rep.set_metric("inverse_power_max_min_ratio", imax / imin);
  }
  rep.notes.push_back("the constants of the two-sided bound are not specified; the envelope is reported only");
  return rep;
}

}  // namespace polyrand::quadform
