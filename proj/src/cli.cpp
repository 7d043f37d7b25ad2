#include "polyrand/cli.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "polyrand/characterization.hpp"
#include "polyrand/charfun.hpp"
#include "polyrand/distribution.hpp"
#include "polyrand/parallel.hpp"
#include "polyrand/quadform.hpp"
#include "polyrand/report.hpp"
#include "polyrand/vinogradov.hpp"

namespace polyrand::cli {

namespace {

using nlohmann::json;

// Operation budget shared with the counting and Monte Carlo kernels.
constexpr double kMaxOperations = 2e11;
constexpr double kSecondsPerOperation = 5e-9;

CostEstimate make_cost(double ops, double bytes, std::string detail) {
  CostEstimate c;
  c.operations = ops;
  c.bytes = bytes;
  c.seconds = ops * kSecondsPerOperation;
  c.feasible = ops <= kMaxOperations;
  c.detail = std::move(detail);
  return c;
}

// Reads keys from a JSON object and rejects whatever was never asked for.
class Params {
 public:
  Params(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) const { return j_.at(key); }

  double real(const std::string& key, double def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    return as_integer(key, j_.at(key));
  }

  std::size_t count(const std::string& key, std::size_t def) {
    long long v = integer(key, static_cast<long long>(def));
    if (v < 0) fail(key, "must be nonnegative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key, std::string def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_string()) fail(key, "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> reals(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) out.push_back(static_cast<int>(as_integer(key, e)));
    return out;
  }

  json object(const std::string& key, json def) {
    if (!has(key)) return def;
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError(ctx_ + ": unknown key '" + item.key() + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(ctx_ + ": key '" + key + "': " + why);
  }

 private:
  long long as_integer(const std::string& key, const json& v) const {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e18) return static_cast<long long>(d);
    }
    fail(key, "expected an integer");
  }

  const json& j_;
  std::string ctx_;
  std::set<std::string> used_;
};

Distribution parse_law(const json& j, const std::string& ctx);

// Laws named without explicit bounds scale with P: uniform on [-P, P] and
// uniform on the integers 1..P.
vinogradov::LawFamily parse_law_family(const json& j, const std::string& ctx) {
  if (j.is_object() && j.contains("name") && j.size() == 1) {
    const auto name = j.at("name").get<std::string>();
    if (name == "uniform") return [](double P) { return laws::uniform(-P, P); };
    if (name == "lattice_uniform")
      return [](double P) { return laws::lattice_uniform(1, static_cast<long long>(std::llround(P))); };
  }
  Distribution fixed = parse_law(j, ctx);
  return [fixed](double) { return fixed; };
}

Distribution parse_law(const json& j, const std::string& ctx) {
  if (j.is_string()) return parse_law(json{{"name", j}}, ctx);
  Params p(j, ctx);
  const std::string name = p.text("name", "");
  Distribution out = [&]() -> Distribution {
    if (name == "normal") return laws::normal(p.real("mean", 0.0), p.real("sd", 1.0));
    if (name == "uniform") return laws::uniform(p.real("lo", -1.0), p.real("hi", 1.0));
    if (name == "lattice_uniform") return laws::lattice_uniform(p.integer("lo", 1), p.integer("hi", 2));
    if (name == "point_mass") return laws::point_mass(p.real("x", 0.0));
    if (name == "rademacher") return laws::rademacher();
    if (name == "cantor") return laws::cantor();
    if (name == "cantor_power") return laws::cantor_power(static_cast<int>(p.integer("copies", 1)));
    if (name == "laplace") return laws::laplace(p.real("scale", 1.0));
    if (name == "root_exponential") return laws::root_exponential();
    if (name == "discrete") {
      std::vector<Atom> atoms;
      const json a = p.object("atoms", json::array());
      if (!a.is_array()) p.fail("atoms", "expected [[x, p], ...]");
      for (const auto& e : a) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
          p.fail("atoms", "expected [[x, p], ...]");
        atoms.push_back({e[0].get<double>(), e[1].get<double>()});
      }
      return laws::discrete(std::move(atoms));
    }
    if (name == "counterexample")
      return characterization::counterexample_sampler(parse_law(p.object("base", json("normal")), ctx + ".base"),
                                                      p.real("c", 1.0));
    throw ConfigError(ctx + ": unknown law '" + name + "'");
  }();
  p.finish();
  return out;
}

characterization::SymmetricQuadraticForm parse_matrix(const json& j) {
  try {
    return characterization::SymmetricQuadraticForm(j.get<std::vector<std::vector<double>>>());
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("matrix: expected an array of numeric rows: ") + ex.what());
  }
}

quadform::HilbertGaussianSpec parse_spec(const json& j) {
  if (!j.is_object()) throw ConfigError("spec: expected a JSON object");
  return quadform::HilbertGaussianSpec::from_json(j.dump());
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo * std::pow(hi / lo, points == 1 ? 0.0 : double(i) / (points - 1)));
  return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * (points == 1 ? 0.0 : double(i) / (points - 1)));
  return g;
}

// Monte Carlo sample cost of one draw of an n-variate quadratic form.
double quad_draw_ops(int n) { return 20.0 * n + static_cast<double>(n) * n; }

// Per-point cost of one Bromwich inversion (panels times quadrature nodes times terms).
double inversion_ops(const quadform::HilbertGaussianSpec& s) {
  return 2e4 * (10.0 + static_cast<double>(s.tail_variances.size()) + (s.continuation ? 60.0 : 0.0));
}

struct SuiteResult {
  EnvelopeReport report;
  std::string headline;
};

struct Job {
  std::function<CostEstimate()> cost;
  std::function<SuiteResult()> exec;
};

using SuiteParser = std::function<Job(Params&, std::uint64_t seed)>;

Job cantor_scan(Params& p, std::uint64_t) {
  double t_min = p.real("t_min", 8.5), t_max = p.real("t_max", 100.0), step = p.real("step", 0.01);
  double tol = p.real("tol", 1e-10), bound = p.real("bound", charfun::kCantorCramerBound);
  if (!(step > 0.0) || !(t_max > t_min)) throw ConfigError("cantor-scan: need t_min < t_max and step > 0");
  return {[=] {
            double points = std::floor((t_max - t_min) / step) + 1;
            double terms = charfun::cantor_truncation(std::max(std::abs(t_max), 1.0), tol);
            return make_cost(points * terms * 4.0, points * 64.0, "grid points x truncated product terms");
          },
          [=] {
            auto r = charfun::cantor_cramer_scan(t_min, t_max, step, tol, bound);
            return SuiteResult{r, "max |L| = " + format_number(*r.metric("max_abs_L")) + " at t = " +
                                      format_number(*r.metric("argmax_t"))};
          }};
}

Job weyl(Params& p, std::uint64_t) {
  auto P_grid = p.integers("P_grid", {10, 100, 1000});
  auto coeffs = p.reals("coefficients", {0.5, 0.25, 0.125});
  for (int P : P_grid)
    if (P < 1) throw ConfigError("weyl: P must be >= 1");
  VinogradovPolynomial f(coeffs);
  return {[=] {
            double ops = 0;
            for (int P : P_grid) ops += 10.0 * P * coeffs.size();
            return make_cost(ops, 64.0 * P_grid.size(), "sum of P times degree");
          },
          [=] {
            EnvelopeReport r;
            r.suite = "weyl";
            r.abscissa_name = "P";
            r.extra_columns = {"re", "im"};
            std::vector<std::complex<double>> v(P_grid.size());
            parallel_for(P_grid.size(), [&](std::size_t i) { v[i] = vinogradov::weyl_sum(P_grid[i], f); });
            for (std::size_t i = 0; i < v.size(); ++i)
              r.add(P_grid[i], std::abs(v[i]), std::nullopt, std::nullopt, {v[i].real(), v[i].imag()});
            return SuiteResult{r, "|F| at P = " + std::to_string(P_grid.back()) + ": " + format_number(std::abs(v.back()))};
          }};
}

vinogradov::CountMethod parse_count_method(const std::string& s) {
  if (s == "enumerate") return vinogradov::CountMethod::enumerate;
  if (s == "signature_histogram") return vinogradov::CountMethod::signature_histogram;
  throw ConfigError("method: expected enumerate or signature_histogram, got '" + s + "'");
}

Job jk_count(Params& p, std::uint64_t) {
  int P = static_cast<int>(p.integer("P", 3)), m = static_cast<int>(p.integer("m", 3)),
      k = static_cast<int>(p.integer("k", 2));
  auto method = parse_count_method(p.text("method", "signature_histogram"));
  return {[=] { return vinogradov::jk_cost(P, m, k, method); },
          [=] {
            auto c = vinogradov::jk_count(P, m, k, method);
            EnvelopeReport r;
            r.suite = "jk-count";
            r.abscissa_name = "P";
            r.add(P, static_cast<double>(c.count), std::nullopt, std::nullopt);
            r.set_metric("m", m);
            r.set_metric("k", k);
            r.notes.push_back("count=" + std::to_string(c.count));
            return SuiteResult{r, std::to_string(c.count)};
          }};
}

vinogradov::IkOptions parse_ik_options(Params& p, std::uint64_t seed, vinogradov::IkOptions o) {
  const std::string method = p.text("method", "");
  if (method == "box_plain") o.method = vinogradov::IkMethod::box_plain;
  else if (method == "box_stratified") o.method = vinogradov::IkMethod::box_stratified;
  else if (method == "importance") o.method = vinogradov::IkMethod::importance;
  else if (method == "unit_cell_quadrature") o.method = vinogradov::IkMethod::unit_cell_quadrature;
  else if (!method.empty()) p.fail("method", "unknown I_k method '" + method + "'");
  o.n_mc = p.count("n_mc", o.n_mc);
  o.n_inner = p.count("n_inner", o.n_inner);
  o.importance_scale = p.real("importance_scale", o.importance_scale);
  o.quadrature_tol = p.real("quadrature_tol", o.quadrature_tol);
  if (p.has("target_rel_se")) o.target_rel_se = p.real("target_rel_se", 0.1);
  o.seed = seed;
  return o;
}

Job ik(Params& p, std::uint64_t seed) {
  auto family = parse_law_family(p.object("law", json{{"name", "uniform"}}), "law");
  double P = p.real("P", 4.0);
  int m = static_cast<int>(p.integer("m", 2)), k = static_cast<int>(p.integer("k", 1));
  vinogradov::IkOptions def;
  def.n_mc = 20'000;
  auto o = parse_ik_options(p, seed, def);
  return {[=] { return vinogradov::ik_cost(family(P), P, m, k, o); },
          [=] {
            auto e = vinogradov::ik_estimate(family(P), P, m, k, o);
            EnvelopeReport r;
            r.suite = "ik";
            r.abscissa_name = "P";
            r.extra_columns = {"std_error", "rel_se"};
            double rel = e.value != 0.0 ? e.std_error / std::abs(e.value) : INFINITY;
            r.add_decided(P, e.value, std::nullopt, std::nullopt, e.converged && e.precise, {e.std_error, rel});
            r.set_metric("m", m);
            r.set_metric("k", k);
            r.set_metric("n_mc", static_cast<double>(e.n_mc));
            if (e.bias_estimate) r.set_metric("bias_estimate", *e.bias_estimate);
            r.notes.push_back("inner=" + e.inner);
            return SuiteResult{r, "I_k = " + format_number(e.value) + " +- " + format_number(e.std_error)};
          }};
}

// Rough operation count of the unit-cell tensor rule used by remark3_check.
double remark3_ops(int P, int m, int k) {
  double ops = 2.0 * P;
  for (int j = 1; j <= m; ++j) ops *= 16.0 * std::max(1.0, std::ceil(k * (std::pow(P, j) - 1.0) / 2.0));
  return ops;
}

Job vinogradov_verify(Params& p, std::uint64_t seed) {
  // Accept both "8" and 8; only remark3 needs the string form.
  const std::string theorem = p.has("theorem") && p.raw("theorem").is_number_integer()
                                  ? std::to_string(p.integer("theorem", 7))
                                  : p.text("theorem", "7");
  const int m = static_cast<int>(p.integer("m", 3));
  auto headline = [](const EnvelopeReport& r) {
    return std::string("theorem check ") + (r.all_pass() ? "passed" : "failed") + " on " +
           std::to_string(r.rows.size()) + " rows";
  };
  if (theorem == "7") {
    int tau = static_cast<int>(p.integer("tau", 1));
    auto P_grid = p.integers("P_grid", {2, 5, 10, 20});
    return {[=] {
              CostEstimate total = make_cost(0, 0, "histogram counts per P");
              for (int P : P_grid) {
                auto c = vinogradov::jk_cost(P, m, m * tau, vinogradov::CountMethod::signature_histogram);
                total.operations += c.operations;
                total.bytes = std::max(total.bytes, c.bytes);
                total.seconds += c.seconds;
                total.feasible = total.feasible && c.feasible;
              }
              return total;
            },
            [=] {
              auto r = vinogradov::verify_theorem7(P_grid, m, tau);
              return SuiteResult{r, headline(r)};
            }};
  }
  if (theorem == "8" || theorem == "10") {
    auto family = parse_law_family(p.object("law", json{{"name", "lattice_uniform"}}), "law");
    auto P_grid = p.reals("P_grid", {2, 4, 8});
    const bool t8 = theorem == "8";
    int order = static_cast<int>(t8 ? p.integer("tau", 1) : p.integer("k", 1));
    auto o = parse_ik_options(p, seed, {});
    return {[=] {
              double ops = 0;
              for (double P : P_grid) ops += vinogradov::ik_cost(family(P), P, m, t8 ? m * order : order, o).operations;
              return make_cost(ops, 64.0 * o.n_inner, "I_k estimates per P");
            },
            [=] {
              auto r = t8 ? vinogradov::verify_theorem8(family, P_grid, m, order, o)
                          : vinogradov::verify_theorem10(family, P_grid, m, order, o);
              return SuiteResult{r, headline(r)};
            }};
  }
  if (theorem == "9") {
    double P = p.real("P", 32.0);
    int b = static_cast<int>(p.integer("b", 2));
    vinogradov::IkOptions def;
    def.method = vinogradov::IkMethod::importance;
    def.n_mc = 20'000;
    def.importance_scale = 0.3;
    auto o = parse_ik_options(p, seed, def);
    return {[=] { return vinogradov::ik_cost(laws::uniform(-P, P), P, m, b * m, o); },
            [=] {
              auto r = vinogradov::verify_theorem9(P, m, b, o);
              return SuiteResult{r, "I_k = " + format_number(*r.metric("estimate")) + " +- " +
                                        format_number(*r.metric("std_error")) + ", bound " +
                                        format_number(*r.metric("bound"))};
            }};
  }
  if (theorem == "remark3") {
    int P = static_cast<int>(p.integer("P", 3)), k = static_cast<int>(p.integer("k", 2));
    return {[=] { return make_cost(remark3_ops(P, m, k), 1e6, "unit-cell tensor rule"); },
            [=] {
              auto r = vinogradov::remark3_check(P, m, k);
              return SuiteResult{r, headline(r)};
            }};
  }
  p.fail("theorem", "expected one of 7, 8, 9, 10, remark3");
}

quadform::DensityParams parse_density_params(Params& p, std::uint64_t seed) {
  quadform::DensityParams d;
  d.rel_tol = p.real("rel_tol", d.rel_tol);
  d.n_mc = p.count("n_mc", d.n_mc);
  d.bandwidth = p.real("bandwidth", d.bandwidth);
  d.seed = seed;
  return d;
}

const json kEmptyTailSpec = json{{"head_variance", 1.0}, {"multiplicity", 4}};

Job qf_density(Params& p, std::uint64_t seed) {
  auto spec = parse_spec(p.object("spec", json{{"head_variance", 1.0}, {"multiplicity", 2}}));
  auto u_grid = p.reals("u_grid", {0.5, 1, 2, 4, 8, 16});
  const std::string m = p.text("method", "cf_inversion");
  if (m != "cf_inversion" && m != "mc_kde") p.fail("method", "expected cf_inversion or mc_kde");
  const bool kde = m == "mc_kde";
  auto d = parse_density_params(p, seed);
  return {[=] {
            double terms = 10.0 + spec.tail_variances.size() + (spec.continuation ? 60.0 : 0.0);
            double ops = kde ? static_cast<double>(d.n_mc) * terms * (1.0 + u_grid.size())
                             : u_grid.size() * inversion_ops(spec);
            return make_cost(ops, kde ? 8.0 * d.n_mc : 1e5, kde ? "linear in n_mc" : "inversions per grid point");
          },
          [=] {
            std::vector<quadform::DensityResult> res(u_grid.size());
            if (kde) {
              res = quadform::density_kde_grid(spec, u_grid, d);
            } else {
              parallel_for(u_grid.size(), [&](std::size_t i) {
                res[i] = quadform::density_p(spec, u_grid[i], quadform::DensityMethod::cf_inversion, d);
              });
            }
            EnvelopeReport r;
            r.suite = "qf-density";
            r.abscissa_name = "u";
            r.extra_columns = {"log_p", "error"};
            for (std::size_t i = 0; i < res.size(); ++i)
              r.add_decided(u_grid[i], res[i].value, std::nullopt, std::nullopt, res[i].converged,
                            {res[i].log_value, res[i].error});
            return SuiteResult{r, "density on " + std::to_string(res.size()) + " points"};
          }};
}

Job qf_sandwich(Params& p, std::uint64_t seed) {
  auto spec = parse_spec(p.object("spec", kEmptyTailSpec));
  auto u_grid = p.reals("u_grid", log_grid(0.5, 50.0, 12));
  quadform::Theorem15Options o;
  o.density = parse_density_params(p, seed);
  o.mc_check_points = p.reals("mc_check_points", {});
  if (!p.has("n_mc")) o.density.n_mc = 1'000'000;
  return {[=] {
            double terms = 10.0 + spec.tail_variances.size() + (spec.continuation ? 60.0 : 0.0);
            double mc = o.mc_check_points.empty() ? 0.0 : static_cast<double>(o.density.n_mc) * terms;
            return make_cost(u_grid.size() * inversion_ops(spec) + mc, 8.0 * (mc > 0 ? o.density.n_mc : 0) + 1e5,
                             "inversions per grid point plus the MC check (linear in n_mc)");
          },
          [=] {
            auto r = quadform::verify_theorem15(spec, u_grid, o);
            return SuiteResult{r, "statistic in [" + format_number(r.min_statistic()) + ", " +
                                      format_number(r.max_statistic()) + "]"};
          }};
}

Job qf_tail(Params& p, std::uint64_t seed) {
  auto spec = parse_spec(p.object("spec", json{{"head_variance", 1.0},
                                                {"multiplicity", 4},
                                                {"head_shift", {1.0}},
                                                {"tail_variances", {0.25}},
                                                {"geometric_ratio", 0.5}}));
  const bool envelope = p.boolean("envelope", true);
  const std::string ms = p.text("method", envelope ? "survival_inversion" : "integrate_p");
  quadform::TailMethod method;
  if (ms == "integrate_p") method = quadform::TailMethod::integrate_p;
  else if (ms == "survival_inversion") method = quadform::TailMethod::survival_inversion;
  else if (ms == "mc") method = quadform::TailMethod::mc;
  else p.fail("method", "expected integrate_p, survival_inversion or mc");
  auto d = parse_density_params(p, seed);
  std::vector<double> r_grid;
  if (p.has("r_grid")) {
    r_grid = p.reals("r_grid", {});
  } else if (envelope) {
    double r_min = quadform::theorem16_threshold(spec);
    r_grid = linear_grid(1.0001 * r_min, 3.0 * r_min, 9);
  } else {
    r_grid = {1.0, 2.0, 3.0};
  }
  return {[=] {
            double per = method == quadform::TailMethod::mc ? static_cast<double>(d.n_mc) * 20.0
                         : method == quadform::TailMethod::integrate_p ? 200.0 * inversion_ops(spec)
                                                                       : inversion_ops(spec);
            return make_cost(r_grid.size() * per, 1e5, "tail evaluations per r");
          },
          [=] {
            if (envelope) {
              auto r = quadform::verify_theorem16(spec, r_grid, d, method);
              return SuiteResult{r, "max/min statistic ratio " + format_number(*r.metric("max_min_ratio"))};
            }
            std::vector<quadform::TailResult> t(r_grid.size());
            parallel_for(r_grid.size(), [&](std::size_t i) { t[i] = quadform::tail_prob(spec, r_grid[i], method, d); });
            EnvelopeReport r;
            r.suite = "qf-tail";
            r.abscissa_name = "r";
            r.extra_columns = {"log_tail", "error"};
            for (std::size_t i = 0; i < t.size(); ++i)
              r.add_decided(r_grid[i], t[i].value, std::nullopt, std::nullopt, t[i].converged,
                            {t[i].log_value, t[i].error});
            return SuiteResult{r, "tail probabilities on " + std::to_string(t.size()) + " points"};
          }};
}

const json kDiagonalForm = json::array({json::array({1.0, 0.0}), json::array({0.0, -1.0})});

Job cp_test(Params& p, std::uint64_t seed) {
  auto Q = parse_matrix(p.object("matrix", kDiagonalForm));
  auto d1 = parse_law(p.object("law1", json{{"name", "normal"}}), "law1");
  auto d2 = parse_law(p.object("law2", json{{"name", "counterexample"}, {"base", "normal"}, {"c", 1.0}}), "law2");
  auto t_grid = p.reals("t_grid", {0.25, 0.5, 1.0, 2.0});
  characterization::CpOptions o;
  o.n_samples = p.count("n_samples", o.n_samples);
  o.seed = seed;
  return {[=] {
            double ops = 2.0 * o.n_samples * (quad_draw_ops(Q.n()) + 30.0 * t_grid.size()) +
                         4.0 * o.n_samples * std::log2(std::max<double>(o.n_samples, 2));
            return make_cost(ops, 32.0 * o.n_samples, "linear in n_samples");
          },
          [=] {
            auto r = characterization::cp_distance(Q, d1, d2, t_grid, o);
            return SuiteResult{r, "max |phi_1 - phi_2| = " + format_number(*r.metric("max_statistic")) +
                                      " (max z " + format_number(*r.metric("max_z")) + ")"};
          }};
}

characterization::Family parse_family(const json& j) {
  Params p(j, "family");
  const std::string name = p.text("name", "normal_scale");
  characterization::Family f;
  if (name == "normal_scale") {
    f = [](int N) { return laws::normal(0.0, 1.0 + 1.0 / N); };
  } else if (name == "counterexample") {
    auto base = parse_law(p.object("base", json("normal")), "family.base");
    f = [base](int N) { return characterization::counterexample_sampler(base, 1.0 / N); };
  } else {
    p.fail("name", "expected normal_scale or counterexample");
  }
  p.finish();
  return f;
}

Job stability(Params& p, std::uint64_t seed) {
  auto Q = parse_matrix(p.object("matrix", kDiagonalForm));
  auto family = parse_family(p.object("family", json{{"name", "normal_scale"}}));
  auto target = parse_law(p.object("target", json{{"name", "normal"}}), "target");
  auto N_grid = p.integers("N_grid", {1, 2, 4, 8, 16, 32});
  for (int N : N_grid)
    if (N < 1) throw ConfigError("stability: N must be >= 1");
  characterization::StabilityOptions o;
  const std::string metric = p.text("metric", "ks");
  if (metric == "ks") o.metric = characterization::StabilityMetric::ks;
  else if (metric == "cf_sup") o.metric = characterization::StabilityMetric::cf_sup;
  else p.fail("metric", "expected ks or cf_sup");
  o.n_samples = p.count("n_samples", o.n_samples);
  o.t_grid = p.reals("t_grid", o.t_grid);
  o.seed = seed;
  return {[=] {
            double per = static_cast<double>(o.n_samples) *
                         (quad_draw_ops(Q.n()) + 2.0 * std::log2(std::max<double>(o.n_samples, 2)));
            return make_cost((N_grid.size() + 1.0) * per, 32.0 * o.n_samples, "linear in n_samples");
          },
          [=] {
            auto r = characterization::stability_experiment(Q, family, target, N_grid, o);
            return SuiteResult{r, "spearman(Q) = " + format_number(*r.metric("spearman_q")) +
                                      ", spearman(marginal) = " + format_number(*r.metric("spearman_marginal"))};
          }};
}

const std::vector<std::pair<std::string, SuiteParser>>& registry() {
  static const std::vector<std::pair<std::string, SuiteParser>> r = {
      {"cantor-scan", cantor_scan}, {"weyl", weyl},           {"jk-count", jk_count},
      {"ik", ik},                   {"vinogradov-verify", vinogradov_verify},
      {"qf-density", qf_density},   {"qf-sandwich", qf_sandwich}, {"qf-tail", qf_tail},
      {"cp-test", cp_test},         {"stability", stability},
  };
  return r;
}

Job make_job(const RunConfig& config, Params& p) {
  for (const auto& [name, parser] : registry())
    if (name == config.suite) return parser(p, config.seed);
  throw ConfigError("unknown suite '" + config.suite + "'");
}

std::string cost_lines(const CostEstimate& c) {
  std::ostringstream o;
  o << "operations=" << format_number(c.operations) << " seconds=" << format_number(c.seconds)
    << " bytes=" << format_number(c.bytes) << " feasible=" << (c.feasible ? "yes" : "no");
  if (!c.detail.empty()) o << " (" << c.detail << ")";
  o << "\n";
  return o.str();
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: invalid JSON: ") + ex.what());
  }
  Params p(j, "config");
  RunConfig c;
  c.suite = p.text("suite", "");
  c.seed = static_cast<std::uint64_t>(p.integer("seed", 0));
  const std::string fmt = p.text("format", "csv");
  if (fmt == "csv") c.format = Format::csv;
  else if (fmt == "json") c.format = Format::json;
  else p.fail("format", "expected csv or json");
  c.jobs = static_cast<unsigned>(p.count("jobs", 1));
  if (p.has("out")) c.out = p.text("out", "");
  c.params = p.object("params", json::object());
  if (!c.params.is_object()) p.fail("params", "expected a JSON object");
  p.finish();
  return c;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : registry()) v.push_back(e.first);
    return v;
  }();
  return names;
}

std::string describe_suites() {
  return R"(Suites and parameters (defaults in parentheses):
  cantor-scan        t_min (8.5), t_max (100), step (0.01), tol (1e-10), bound (exp(-0.027))
  weyl               P_grid ([10,100,1000]), coefficients ([0.5,0.25,0.125])
  jk-count           P (3), m (3), k (2), method (signature_histogram | enumerate)
  ik                 law ({"name":"uniform"} = uniform on [-P,P]), P (4), m (2), k (1),
                     method (box_stratified | box_plain | importance | unit_cell_quadrature),
                     n_mc (20000), n_inner (20000), importance_scale (0.5), quadrature_tol (1e-9),
                     target_rel_se (unset)
  vinogradov-verify  theorem (7 | 8 | 9 | 10 | remark3), m (3)
                       7: tau (1), P_grid ([2,5,10,20])
                       8: tau (1), law ({"name":"lattice_uniform"} = 1..P), P_grid ([2,4,8]), I_k options
                       9: P (32), b (2), method (importance), n_mc (20000), importance_scale (0.3)
                       10: k (1), law, P_grid, I_k options as for 8
                       remark3: P (3), k (2)
  qf-density         spec ({"multiplicity":2}), u_grid ([0.5,1,2,4,8,16]),
                     method (cf_inversion | mc_kde), rel_tol (1e-10), n_mc (1000000), bandwidth (0 = auto)
  qf-sandwich        spec ({"multiplicity":4}), u_grid (12 log-spaced points on [0.5,50]),
                     mc_check_points ([]), n_mc (1000000), rel_tol, bandwidth
  qf-tail            spec (k=4, head_shift [1], tail [0.25] continued with ratio 0.5),
                     envelope (true), r_grid (9 points on [r_min, 3 r_min] when envelope),
                     method (survival_inversion | integrate_p | mc), rel_tol, n_mc
  cp-test            matrix ([[1,0],[0,-1]]), law1 ("normal"), law2 (counterexample of normal, c=1),
                     t_grid ([0.25,0.5,1,2]), n_samples (200000)
  stability          matrix ([[1,0],[0,-1]]), family (normal_scale: sd 1+1/N | counterexample: c=1/N),
                     target ("normal"), N_grid ([1,2,4,8,16,32]), metric (ks | cf_sup),
                     n_samples (100000), t_grid ([0.25,0.5,1,2,4])

Laws: {"name": normal|uniform|lattice_uniform|point_mass|rademacher|cantor|cantor_power|laplace|
       root_exponential|discrete|counterexample, ...parameters}; a bare string is a law with defaults.
Spec keys: head_variance, multiplicity, head_shift, tail_variances, tail_shift, geometric_ratio,
       continuation_shift_sq, threshold_uses_head_k.
Config file: {"suite", "seed", "format", "jobs", "out", "params": {...}}. Unknown keys are rejected.
Exit codes: 0 pass, 1 bound violation, 2 config error, 3 infeasible.
)";
}

CostEstimate dry_run(const RunConfig& config) {
  try {
    Params p(config.params, config.suite);
    Job job = make_job(config, p);
    p.finish();
    return job.cost();
  } catch (const InvalidInput& ex) {
    throw ConfigError(ex.what());
  }
}

RunOutcome run(const RunConfig& config) {
  RunOutcome out;
  try {
    set_jobs(std::max(1u, config.jobs));
    Params p(config.params, config.suite);
    Job job = make_job(config, p);
    p.finish();
    CostEstimate cost = job.cost();
    out.cost = cost;
    if (config.dry_run || !cost.feasible) {
      out.exit_code = cost.feasible ? kPass : kInfeasible;
      out.summary = (cost.feasible ? "dry run: " : "infeasible: ") + cost_lines(cost);
      return out;
    }
    SuiteResult res = job.exec();
    out.artifact = config.format == Format::csv ? res.report.to_csv() : res.report.to_json();
    const bool pass = res.report.all_pass();
    out.exit_code = pass ? kPass : kViolation;
    out.summary = res.headline + "\n" + config.suite + ": " + (pass ? "pass" : "violation") + "\n";
  } catch (const ConfigError& ex) {
    out.exit_code = kConfigError;
    out.summary = std::string("config error: ") + ex.what() + "\n";
  } catch (const InvalidInput& ex) {
    out.exit_code = kConfigError;
    out.summary = std::string("invalid input: ") + ex.what() + "\n";
  } catch (const Infeasible& ex) {
    out.exit_code = kInfeasible;
    out.cost = ex.cost();
    out.summary = std::string("infeasible: ") + ex.what() + "\n" + cost_lines(ex.cost());
  } catch (const std::exception& ex) {
    out.exit_code = kConfigError;
    out.summary = std::string("error: ") + ex.what() + "\n";
  }
  return out;
}

}  // namespace polyrand::cli
