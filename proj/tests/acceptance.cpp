// Acceptance run: one line per criterion, exit status 1 if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "polyrand/characterization.hpp"
#include "polyrand/charfun.hpp"
#include "polyrand/cli.hpp"
#include "polyrand/numerics.hpp"
#include "polyrand/quadform.hpp"
#include "polyrand/report.hpp"
#include "polyrand/vinogradov.hpp"

using namespace polyrand;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects sub-checks; the first few failures are kept in the detail line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 3) failed_ += (failed_.empty() ? "" : "; ") + what;
  }
  void info(const std::string& s) { info_ += (info_.empty() ? "" : ", ") + s; }
  Verdict verdict() const {
    Verdict v{failures_ == 0, info_};
    if (failures_ > 0)
      v.detail += (v.detail.empty() ? "" : "; ") + std::to_string(failures_) + " failed check(s): " + failed_;
    return v;
  }

 private:
  int failures_ = 0;
  std::string failed_;
  std::string info_;
};

std::string num(double x) { return format_number(x); }

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return g;
}

std::vector<double> lin_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  return g;
}

Verdict cantor_bound() {
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = charfun::cantor_cramer_scan(8.5, 2000.0, 0.01, 1e-10);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double mx = *r.metric("max_abs_L");
  c.info("max |L| = " + num(mx) + " at t = " + num(*r.metric("argmax_t")) + ", bound " +
         num(charfun::kCantorCramerBound) + ", scan " + num(secs) + " s");
  c.expect(r.all_pass() && mx <= charfun::kCantorCramerBound, "bound exceeded");
  c.expect(secs < 60.0, "scan slower than 1 min");
  return c.verdict();
}

Verdict cantor_functional_equation() {
  Checks c;
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = u(gen);
    const double gap = std::abs(charfun::cantor_cf(3.0 * t) - std::cos(2.0 * std::numbers::pi * t) * charfun::cantor_cf(t));
    worst = std::max(worst, gap);
  }
  c.info("max gap " + num(worst) + " over 10^4 points");
  c.expect(worst <= 1e-12, "gap above 1e-12");
  return c.verdict();
}

Verdict counting_exactness() {
  using namespace vinogradov;
  Checks c;
  int compared = 0;
  for (int P = 1; P <= 6; ++P)
    for (int m = 2; m <= 4; ++m)
      for (int k = 1; k <= 3; ++k) {
        const auto a = jk_count(P, m, k, CountMethod::enumerate).count;
        const auto b = jk_count(P, m, k, CountMethod::signature_histogram).count;
        c.expect(a == b, "methods differ at P=" + std::to_string(P) + " m=" + std::to_string(m) +
                             " k=" + std::to_string(k));
        ++compared;
        if (k == 1) c.expect(a == static_cast<std::uint64_t>(P), "J_1 != P at P=" + std::to_string(P));
      }
  for (int P = 1; P <= 10; ++P)
    for (int m = 2; m <= 4; ++m)
      c.expect(jk_count(P, m, 2).count == static_cast<std::uint64_t>(2 * P * P - P),
               "J_2 != 2P^2 - P at P=" + std::to_string(P));
  double worst = 0.0;
  for (int P = 1; P <= 4; ++P)
    for (int k = 1; k <= 2; ++k) {
      bool converged = false;
      const double I = jk_by_integral(P, 3, k, &converged);
      const double J = static_cast<double>(jk_count(P, 3, k).count);
      worst = std::max(worst, std::abs(I - J) / J);
      c.expect(converged, "unit-cell rule not converged at P=" + std::to_string(P));
    }
  c.expect(worst <= 1e-6, "unit-cell integral off by " + num(worst));
  c.info(std::to_string(compared) + " method pairs equal, unit-cell max rel gap " + num(worst));
  return c.verdict();
}

Verdict lattice_identity() {
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int P : {2, 3, 4})
    for (int k : {1, 2}) {
      auto r = vinogradov::remark3_check(P, 3, k);
      worst = std::max(worst, *r.metric("relative_gap"));
      c.expect(r.all_pass(), "gap above 1e-6 at P=" + std::to_string(P) + " k=" + std::to_string(k));
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 300.0, "slower than 5 min");
  c.info("max rel gap " + num(worst) + ", " + num(secs) + " s");
  return c.verdict();
}

Verdict mean_value_sanity() {
  Checks c;
  std::vector<int> P;
  for (int p = 2; p <= 20; ++p) P.push_back(p);
  auto r = vinogradov::verify_theorem7(P, 3, 1);
  c.expect(r.all_pass(), "bound or diagonal check failed");
  c.expect(*r.metric("diagonal_ok") == 1.0, "J_k < P^k somewhere");
  c.info("max log(J / (c P^{2k - Delta})) = " + num(r.max_statistic()) + " over P = 2..20");
  return c.verdict();
}

Verdict continuous_mean_value() {
  Checks c;
  vinogradov::IkOptions o;
  o.method = vinogradov::IkMethod::importance;
  o.n_mc = 20000;
  o.importance_scale = 0.3;
  o.seed = 9;
  auto r = vinogradov::verify_theorem9(32.0, 3, 2, o);
  const double bound = std::pow(2.0, 48) * std::pow(32.0, -9) * 4.0;
  const double est = *r.metric("estimate"), se = *r.metric("std_error");
  c.expect(std::abs(*r.metric("bound") / bound - 1.0) < 1e-12, "bound constant mismatch");
  c.expect(se / est < 0.1, "relative SE " + num(se / est) + " not below 10%");
  c.expect(est + 3.0 * se <= bound, "estimate within 3 SE of the bound");
  c.info("I_k = " + num(est) + " +- " + num(se) + " (rel " + num(se / est) + "), bound " + num(bound) + ", margin " +
         num((bound - est) / se) + " SE");
  return c.verdict();
}

Verdict gaussian_monomials() {
  using charfun::MonomialMethod;
  Checks c;
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.1 * i;
    const auto q = charfun::gaussian_monomial_cf(2, t, MonomialMethod::quadrature);
    worst = std::max(worst, std::abs(q.value - std::complex<double>(1.0 / std::sqrt(1.0 + t * t), 0.0)));
  }
  c.expect(worst <= 1e-8, "k=2 quadrature off by " + num(worst));
  double worst_z = 0.0;
  for (double t : {1.0, 10.0, 100.0}) {
    const auto q = charfun::gaussian_monomial_cf(3, t, MonomialMethod::quadrature);
    const auto mc = charfun::gaussian_monomial_cf(3, t, MonomialMethod::monte_carlo, 1'000'000, 31);
    const double z = std::abs(q.value - mc.value) / mc.std_error;
    worst_z = std::max(worst_z, z);
    c.expect(z <= 3.0, "k=3 MC vs quadrature z=" + num(z) + " at t=" + num(t));
  }
  auto env = charfun::theorem4_envelope(2, log_grid(1.0, 1e4, 81));
  c.expect(env.min_statistic() >= 0.707 && env.max_statistic() <= 1.0, "k=2 envelope statistic outside [0.707, 1]");
  c.info("k=2 max err " + num(worst) + ", k=3 max z " + num(worst_z) + ", k=2 statistic in [" +
         num(env.min_statistic()) + ", " + num(env.max_statistic()) + "]");
  return c.verdict();
}

Verdict decay_exponents() {
  Checks c;
  const auto grid = log_grid(1.0, 100.0, 21);
  for (int m : {2, 3}) {
    auto r = charfun::decay_envelope(laws::normal(), Polynomial1D::monomial(m), 1, {}, grid, {}, 1'000'000, 40 + m);
    const double s = *r.metric("fitted_slope");
    c.expect(std::abs(s + 1.0 / m) <= 0.1, "normal x^" + std::to_string(m) + " slope " + num(s));
    c.info("normal x^" + std::to_string(m) + " slope " + num(s));
  }
  const double eps = 0.2;
  const int k = charfun::cantor_power_threshold(eps);
  c.expect(k >= std::log(2.0 / (std::pow(3.0, eps) - 1.0)) / 0.027, "copy count below the threshold");
  auto r = charfun::decay_envelope(laws::cantor_power(k), Polynomial1D::monomial(2), 1, {}, grid, {}, 10'000'000, 50);
  const double s = *r.metric("fitted_slope");
  c.expect(*r.metric("fit_points") >= 2, "too few conclusive points for the Cantor fit");
  c.expect(s <= eps - 0.5 + 0.1, "Cantor power slope " + num(s));
  c.info("Cantor^" + std::to_string(k) + " x^2 slope " + num(s) + " (limit " + num(eps - 0.4) + ")");
  return c.verdict();
}

Verdict quadratic_sandwich() {
  using namespace quadform;
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  HilbertGaussianSpec bare;
  bare.k = 4;
  auto flat = verify_theorem15(bare, log_grid(0.5, 500.0, 13));
  double flat_gap = 0.0;
  for (const auto& row : flat.rows) flat_gap = std::max(flat_gap, std::abs(row.statistic - 1.0));
  c.expect(flat_gap <= 1e-8, "empty tail statistic differs from 1 by " + num(flat_gap));

  HilbertGaussianSpec spec;
  spec.k = 4;
  spec.tail_variances = {0.25};
  spec.continuation = GeometricContinuation{0.5, 0.0};
  const double uss = *tilt_weight(spec).u_double_star;
  Theorem15Options o;
  o.density.n_mc = 10'000'000;
  o.density.seed = 15;
  o.mc_check_points = {2.0, 4.0, 6.0, 10.0};
  auto rep = verify_theorem15(spec, lin_grid(uss, 5.0 * uss, 17), o);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : rep.rows) {
    if (row.extra[0] != 0.0) continue;
    lo = std::min(lo, row.statistic);
    hi = std::max(hi, row.statistic);
  }
  c.expect(lo >= 0.125 * 0.95 && hi <= 1.05, "statistic outside [0.11875, 1.05]");
  c.expect(*rep.metric("mc_max_abs_z") <= 3.0, "inversion vs MC z=" + num(*rep.metric("mc_max_abs_z")));
  c.expect(rep.all_pass(), "report rows failed");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 600.0, "slower than 10 min");
  c.info("empty tail max |stat-1| " + num(flat_gap) + ", u** = " + num(uss) + ", statistic in [" + num(lo) + ", " +
         num(hi) + "], MC max z " + num(*rep.metric("mc_max_abs_z")) + ", " + num(secs) + " s");
  return c.verdict();
}

Verdict head_density_bounds() {
  using namespace quadform;
  Checks c;
  int points = 0;
  double tightest = INFINITY;
  for (int k : {3, 4, 5})
    for (double a : {0.5, 2.0})
      for (int i = 1; i <= 500; ++i) {
        const double u = 0.1 * i;
        const auto b = fk_upper_bounds(u, k, 1.0, a);
        const double lf = log_noncentral_fk(u, k, 1.0, a * a);
        double lb = b.log_bound_a;
        if (b.log_bound_b) lb = std::min(lb, *b.log_bound_b);
        c.expect(lf <= lb + 1e-12, "bound violated at k=" + std::to_string(k) + " a=" + num(a) + " u=" + num(u));
        tightest = std::min(tightest, lb - lf);
        ++points;
      }
  double worst_mass = 0.0, worst_mean = 0.0;
  for (int k : {3, 4, 5})
    for (double a : {0.5, 2.0}) {
      // u = w^2 removes the endpoint singularity for small k.
      auto mass = numerics::integrate([&](double w) { return noncentral_fk(w * w, k, 1.0, a * a) * 2.0 * w; }, 0.0,
                                      20.0, 1e-12);
      auto mean = numerics::integrate(
          [&](double w) { return w * w * noncentral_fk(w * w, k, 1.0, a * a) * 2.0 * w; }, 0.0, 20.0, 1e-12);
      worst_mass = std::max(worst_mass, std::abs(mass.value - 1.0));
      worst_mean = std::max(worst_mean, std::abs(mean.value - (k + a * a)) / (k + a * a));
    }
  c.expect(worst_mass <= 1e-9, "f_k mass off by " + num(worst_mass));
  c.expect(worst_mean <= 1e-9, "f_k mean off by " + num(worst_mean));
  HilbertGaussianSpec spec;
  spec.k = 3;
  spec.head_shift = {1.0};
  spec.tail_variances = {0.5};
  const double ER = tilt_weight(spec).ER;
  auto p_mass = numerics::integrate(
      [&](double w) { return density_p(spec, w * w, DensityMethod::cf_inversion).value * 2.0 * w; }, 1e-6, 12.0, 1e-9);
  c.expect(std::abs(p_mass.value - 1.0) <= 1e-6, "p mass off by " + num(std::abs(p_mass.value - 1.0)));
  c.info(std::to_string(points) + " grid points, min log margin " + num(tightest) + ", mass err " + num(worst_mass) +
         ", mean rel err " + num(worst_mean) + ", p mass err " + num(std::abs(p_mass.value - 1.0)) + " (ER " + num(ER) +
         ")");
  return c.verdict();
}

Verdict tail_envelope() {
  using namespace quadform;
  Checks c;
  HilbertGaussianSpec spec;
  spec.k = 4;
  spec.head_shift = {1.0};
  spec.tail_variances = {0.25};
  spec.continuation = GeometricContinuation{0.5, 0.0};
  const double r0 = theorem16_threshold(spec);
  auto coarse = verify_theorem16(spec, lin_grid(1.0001 * r0, 3.0 * r0, 9));
  auto fine = verify_theorem16(spec, lin_grid(1.0001 * r0, 3.0 * r0, 17));
  bool positive = true;
  for (const auto* rep : {&coarse, &fine})
    for (const auto& row : rep->rows) positive = positive && row.statistic > 0.0 && std::isfinite(row.statistic);
  const double a = *coarse.metric("max_min_ratio"), b = *fine.metric("max_min_ratio");
  c.expect(positive, "non-positive or non-finite statistic");
  c.expect(std::isfinite(a) && std::isfinite(b), "max/min ratio not finite");
  c.expect(std::abs(b - a) / a < 0.2, "refinement changed max/min ratio by " + num(std::abs(b - a) / a));
  c.info("r in [" + num(1.0001 * r0) + ", " + num(3.0 * r0) + "], max/min " + num(a) + " -> " + num(b) +
         " (inverse-power column " + num(*fine.metric("inverse_power_max_min_ratio")) + ")");
  return c.verdict();
}

Verdict characterization_checks() {
  using namespace characterization;
  Checks c;
  SymmetricQuadraticForm Q({{0, 0.5, 0}, {0.5, 0, -0.5}, {0, -0.5, 0}});
  auto sym = quad_moments(Q, MomentSequence::standard_normal(4), 2);
  c.expect(sym.exact && sym.moments.alpha(2) == 2.0, "symbolic E Q^2 = " + num(sym.moments.alpha(2)));
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z;
  const int n = 1'000'000;
  double s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x[3] = {z(gen), z(gen), z(gen)};
    const double q = Q(x);
    s2 += q * q;
    s4 += q * q * q * q;
  }
  const double m2 = s2 / n, se = std::sqrt((s4 / n - m2 * m2) / n);
  c.expect(std::abs(m2 - 2.0) <= 3.0 * se, "MC E Q^2 = " + num(m2));

  // Z_1^2 - Z_2^2 against X_1^2 - X_2^2 on shared draws; only rounding separates them.
  auto p1 = counterexample_pairs(laws::normal(), 1.0, 100000, 21);
  auto p2 = counterexample_pairs(laws::normal(), 1.0, 100000, 22);
  double path_gap = 0.0;
  for (std::size_t i = 0; i < p1.z.size(); ++i) {
    const double zq = p1.z[i] * p1.z[i] - p2.z[i] * p2.z[i];
    const double xq = p1.x[i] * p1.x[i] - p2.x[i] * p2.x[i];
    const double scale = p1.x[i] * p1.x[i] + p2.x[i] * p2.x[i];
    path_gap = std::max(path_gap, std::abs(xq - zq) / scale);
  }
  c.expect(path_gap <= 8.0 * std::numeric_limits<double>::epsilon(), "path identity gap " + num(path_gap));

  SymmetricQuadraticForm D({{1, 0}, {0, -1}});
  std::vector<double> t = {0.25, 0.5, 1.0, 2.0};
  CpOptions o;
  o.n_samples = 200000;
  o.seed = 5;
  auto cp = cp_distance(D, laws::normal(), counterexample_sampler(laws::normal(), 1.0), t, o);
  c.expect(cp.all_pass(), "Q CFs differ beyond 3 SE (max z " + num(*cp.metric("max_z")) + ")");
  c.expect(*cp.metric("ks_marginal_reject_99") == 1.0, "marginal KS does not reject");

  StabilityOptions so;
  so.seed = 6;
  std::vector<int> N = {1, 2, 4, 8, 16, 32};
  auto st = stability_experiment(D, [](int k) { return laws::normal(0.0, 1.0 + 1.0 / k); }, laws::normal(), N, so);
  c.expect(st.all_pass(), "stability distances not co-monotone");
  c.info("E Q^2 symbolic 2, MC " + num(m2) + " +- " + num(se) + ", path gap " + num(path_gap) + " (relative), cp max z " +
         num(*cp.metric("max_z")) + ", marginal KS " + num(*cp.metric("ks_marginal_statistic")) +
         ", Spearman q/marginal " + num(*st.metric("spearman_q")) + "/" + num(*st.metric("spearman_marginal")));
  return c.verdict();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict reproducibility(const std::string& cli) {
  Checks c;
  if (cli.empty()) {
    c.expect(false, "no --cli binary given");
    return c.verdict();
  }
  const auto dir = std::filesystem::temp_directory_path() / ("polyrand_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  int identical = 0;
  for (const auto& suite : cli::suite_names()) {
    std::string outs[2];
    int codes[2];
    for (int i = 0; i < 2; ++i) {
      const auto path = dir / (suite + (i == 0 ? ".j1.csv" : ".j8.csv"));
      const std::string cmd = "\"" + cli + "\" --suite " + suite + " --seed 7 --jobs " + (i == 0 ? "1" : "8") +
                              " --out \"" + path.string() + "\" > /dev/null 2>&1";
      codes[i] = std::system(cmd.c_str());
      outs[i] = slurp(path);
    }
    const bool same = codes[0] == 0 && codes[1] == 0 && !outs[0].empty() && outs[0] == outs[1];
    c.expect(same, suite + " differs or failed");
    identical += same;
  }
  std::filesystem::remove_all(dir);
  c.info(std::to_string(identical) + "/" + std::to_string(cli::suite_names().size()) +
         " suites byte-identical across --jobs 1 and 8");
  return c.verdict();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks; prints one line per criterion."};
  std::string cli_path;
  std::vector<int> only;
  app.add_option("--cli", cli_path, "Path to the polyrand command-line binary");
  app.add_option("--only", only, "Run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Cantor CF bound on [8.5, 2000]", cantor_bound},
      {"Cantor functional equation", cantor_functional_equation},
      {"Diophantine counts agree across methods", counting_exactness},
      {"lattice I_k equals 2^m P^-2k J_k", lattice_identity},
      {"J_k against the mean value bound and the diagonal", mean_value_sanity},
      {"continuous uniform I_k below its bound", continuous_mean_value},
      {"Gaussian monomial CFs", gaussian_monomials},
      {"decay exponents", decay_exponents},
      {"quadratic-form density sandwich", quadratic_sandwich},
      {"f_k upper bounds, mass and mean", head_density_bounds},
      {"tail envelope stability", tail_envelope},
      {"quadratic-form characterization", characterization_checks},
      {"byte-identical reruns", [&] { return reproducibility(cli_path); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& ex) {
      v = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && v.pass;
    std::printf("criterion %2d %s: %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
