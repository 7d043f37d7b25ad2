#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "polyrand/charfun.hpp"
#include "polyrand/error.hpp"

using namespace polyrand;
using namespace polyrand::charfun;

namespace {

// Independent reference: 80 factors of the infinite cosine product.
double cantor_reference(double t) {
  double p = 1.0;
  double theta = 2.0 * std::numbers::pi * t;
  for (int j = 1; j <= 80; ++j) {
    theta /= 3.0;
    p *= std::cos(theta);
  }
  return p;
}

// E exp{i t Z1 Z2} = E exp{-t^2 Z^2 / 2}, integrated by a fine trapezoid rule.
double monomial2_reference(double t) {
  const double h = 1e-3;
  double s = 0.0;
  for (double z = -12.0; z <= 12.0; z += h)
    s += std::exp(-0.5 * z * z * (1.0 + t * t));
  return s * h / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

TEST_SUITE("charfun") {
  TEST_CASE("empirical CF examples") {
    auto f2 = AnyPolynomial{Polynomial1D::monomial(2)};
    auto at0 = cf_empirical(laws::normal(), f2, 1, {}, 0.0, 1000, 1);
    CHECK(at0.value == std::complex<double>(1.0, 0.0));
    CHECK(at0.std_error == 0.0);

    auto chi = cf_empirical(laws::normal(), f2, 1, {}, 1.0, 400000, 2);
    const std::complex<double> oracle = std::pow(std::complex<double>(1.0, -2.0), -0.5);
    CHECK(std::abs(oracle - std::complex<double>(0.5688, 0.3516)) < 1e-4);
    CHECK(std::abs(chi.value - oracle) <= 3.0 * chi.std_error);

    auto det = cf_empirical(laws::point_mass(1.0), f2, 4, {}, std::numbers::pi, 200, 3);
    CHECK(std::abs(det.value - 1.0) < 1e-12);

    CHECK_THROWS_AS(cf_empirical(laws::normal(), f2, 1, {}, 1.0, 50, 1), InvalidInput);
    CHECK_THROWS_AS(cf_empirical(laws::normal(), f2, 0, {}, 1.0, 1000, 1), InvalidInput);
  }

  TEST_CASE("empirical CF is bounded by one up to noise and shift-consistent") {
    auto f = AnyPolynomial{MultiIndexPolynomial::product_of_coordinates(2)};
    std::vector<double> grid = {0.5, 1.0, 3.0, 9.0};
    auto est = cf_empirical_grid(laws::uniform(-1.0, 1.0), f, 3, std::vector<double>{0.2, -0.1}, grid, 20000, 4);
    for (auto& e : est) CHECK(std::abs(e.value) <= 1.0 + 3.0 * e.std_error);
    // A shift a turns x^2 into (x + a)^2; S_1 + a for a point mass is deterministic.
    auto g = cf_empirical(laws::point_mass(0.0), Polynomial1D::monomial(2), 1, std::vector<double>{1.5}, 2.0, 100, 5);
    CHECK(std::abs(g.value - std::polar(1.0, 2.0 * 2.25)) < 1e-12);
  }

  TEST_CASE("Cantor CF values and the functional equation") {
    CHECK(cantor_cf(0.0) == 1.0);
    for (double t = 0.1; t <= 100.0; t += 0.1) {
      CHECK(std::abs(cantor_cf(3.0 * t, 1e-15) - std::cos(2.0 * std::numbers::pi * t) * cantor_cf(t, 1e-15)) < 1e-12);
    }
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 3000.0);
    for (int i = 0; i < 500; ++i) {
      double t = u(gen);
      CHECK(std::abs(cantor_cf(t, 1e-10) - cantor_reference(t)) < 1e-10);
    }
  }

  TEST_CASE("Cantor scan respects the Cramer bound and its preconditions") {
    auto r = cantor_cramer_scan(8.5, 100.0, 0.01, 1e-10);
    CHECK(r.all_pass());
    CHECK(*r.metric("max_abs_L") < 0.97336);
    CHECK(*r.metric("max_abs_L") <= kCantorCramerBound);
    auto trivial = cantor_cramer_scan(0.0, 1.0, 0.01, 1e-10, 1.0);
    CHECK(trivial.all_pass());
    CHECK_THROWS_AS(cantor_cramer_scan(1.0, 20.0, 0.01, 1e-10), InvalidInput);
    CHECK(kCantorCramerBound == doctest::Approx(0.97336).epsilon(1e-5));
  }

  TEST_CASE("Gaussian monomial CF across methods") {
    for (double t : {0.0, 0.3, 1.0, 4.0}) {
      auto c = gaussian_monomial_cf(1, t, MonomialMethod::closed_form);
      CHECK(c.value.real() == doctest::Approx(std::exp(-0.5 * t * t)).epsilon(1e-14));
    }
    CHECK(gaussian_monomial_cf(2, 1.0, MonomialMethod::closed_form).value.real() ==
          doctest::Approx(0.70711).epsilon(1e-5));
    for (double t = 0.0; t <= 100.0; t += 2.5) {
      auto q = gaussian_monomial_cf(2, t, MonomialMethod::quadrature);
      CHECK(std::abs(q.value.real() - 1.0 / std::sqrt(1.0 + t * t)) < 1e-8);
      if (t <= 20.0) CHECK(std::abs(q.value.real() - monomial2_reference(t)) < 1e-8);
    }
    for (double t : {1.0, 10.0}) {
      auto q = gaussian_monomial_cf(3, t, MonomialMethod::quadrature);
      auto mc = gaussian_monomial_cf(3, t, MonomialMethod::monte_carlo, 200000, 6);
      CHECK(std::abs(mc.value - q.value) <= 3.0 * mc.std_error);
      auto neg = gaussian_monomial_cf(3, -t, MonomialMethod::monte_carlo, 200000, 6);
      CHECK(std::abs(neg.value - std::conj(mc.value)) < 1e-12);
    }
    CHECK_THROWS_AS(gaussian_monomial_cf(3, 1.0, MonomialMethod::closed_form), InvalidInput);
    CHECK_THROWS_AS(gaussian_monomial_cf(5, 1.0, MonomialMethod::quadrature), InvalidInput);
    CHECK_THROWS_AS(gaussian_monomial_cf(0, 1.0, MonomialMethod::monte_carlo), InvalidInput);
  }

  TEST_CASE("monomial envelope for two and three factors") {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(std::pow(10.0, i / 10.0));
    auto r2 = theorem4_envelope(2, grid);
    CHECK(r2.all_pass());
    CHECK(r2.min_statistic() >= 0.707);
    CHECK(r2.max_statistic() < 1.0);
    CHECK(r2.rows.back().statistic == doctest::Approx(1.0).epsilon(1e-7));
    std::vector<double> coarse;
    for (int i = 0; i <= 40; i += 8) coarse.push_back(grid[i]);
    auto r3 = theorem4_envelope(3, coarse);
    CHECK(r3.all_pass());
    CHECK(std::isfinite(*r3.metric("max_min_ratio")));
    CHECK_THROWS_AS(theorem4_envelope(2, std::vector<double>{0.5}), InvalidInput);
  }

  TEST_CASE("averaged CF profiles") {
    std::vector<double> T = {1.0, 5.0, 40.0};
    auto normal = phi_profile(laws::normal(), T);
    CHECK(normal.at(40.0) == doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-6));
    auto pm = phi_profile(laws::point_mass(0.0), T);
    for (double t : T) CHECK(pm.at(t) == doctest::Approx(2.0 * t).epsilon(1e-12));
    std::vector<double> fine;
    for (int i = 1; i <= 30; ++i) fine.push_back(i * 3.0);
    auto cantor = phi_profile(laws::cantor(), fine);
    for (std::size_t i = 0; i < fine.size(); ++i) {
      CHECK(cantor.phi[i] <= 2.0 * fine[i] + 1e-9);
      if (i > 0) CHECK(cantor.phi[i] >= cantor.phi[i - 1]);
    }
    CHECK_THROWS_AS(pm.at(2.0), InvalidInput);
    CHECK_THROWS_AS(phi_profile(Distribution("no-cf", [](Rng& r) { return uniform01(r); }), T), InvalidInput);
  }

  TEST_CASE("growth condition on averaged CFs") {
    std::vector<double> b = {1.0, 2.0, 4.0, 8.0}, t = {1.0, 2.0, 5.0, 10.0};
    auto grid = condition5_grid(b, t);
    auto normal = phi_profile(laws::normal(), grid);
    const double A = std::sqrt(2.0 * std::numbers::pi);
    CHECK(condition5_check(normal, [A](double) { return A; }, 0.0, b, t).all_pass());

    auto pm = phi_profile(laws::point_mass(0.0), grid);
    CHECK_FALSE(condition5_check(pm, [](double s) { return 2.0 * s; }, 0.3, b, t).all_pass());

    // Predictive check: fit C on T <= 50, then test b t up to 400.
    const double eps = 0.2;
    const int k = cantor_power_threshold(eps);
    std::vector<double> tt;
    for (int i = 0; i <= 12; ++i) tt.push_back(std::pow(50.0, i / 12.0));
    auto g2 = condition5_grid(b, tt);
    auto prof = phi_profile(laws::cantor_power(k), g2);
    double C = 0.0;
    for (std::size_t i = 0; i < prof.T.size(); ++i)
      if (prof.T[i] <= 50.0) C = std::max(C, prof.phi[i] / std::pow(prof.T[i], eps));
    auto rep = condition5_check(prof, [&](double s) { return C * std::pow(s, eps); }, eps, b, tt);
    CHECK(rep.all_pass());
    CHECK(prof.growth_exponent <= eps);
    CHECK_THROWS_AS(condition5_check(pm, [](double) { return 1.0; }, 0.6, b, t), InvalidInput);
  }

  TEST_CASE("Cantor copy threshold") {
    for (double eps : {0.05, 0.1, 0.2, 0.4}) {
      int expected = static_cast<int>(std::ceil(std::log(2.0 / (std::pow(3.0, eps) - 1.0)) / 0.027));
      CHECK(cantor_power_threshold(eps) == expected);
    }
    CHECK(cantor_power_threshold(0.2) == 78);
  }

  TEST_CASE("log-log slope fit") {
    std::vector<double> x, y;
    for (int i = 1; i <= 20; ++i) {
      x.push_back(i);
      y.push_back(3.0 * std::pow(i, -0.7));
    }
    auto fit = fit_loglog_slope(x, y);
    CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.std_error < 1e-10);
  }

  TEST_CASE("decay envelope recovers the chi-square exponent") {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(std::pow(10.0, i / 10.0));
    auto r = decay_envelope(laws::normal(), Polynomial1D::monomial(2), 1, {}, grid, {}, 300000, 12);
    CHECK(*r.metric("fitted_slope") == doctest::Approx(-0.5).epsilon(0.1));
    CHECK(std::abs(*r.metric("fitted_slope") + 0.5) < 0.05);
    // With the exact prefactor the bounded statistic |g| t^{1/2} stays below 2^{-1/2} plus noise.
    auto b = decay_envelope(laws::normal(), Polynomial1D::monomial(2), 1, {}, grid, {std::sqrt(0.5), 0.5}, 300000, 12);
    CHECK(b.all_pass());
  }
}
