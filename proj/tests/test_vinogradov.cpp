#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "polyrand/distribution.hpp"
#include "polyrand/error.hpp"
#include "polyrand/vinogradov.hpp"

using namespace polyrand;
using namespace polyrand::vinogradov;

namespace {

// Odometer over all 2k-tuples in {1..P}; counts the zero power-sum differences.
std::uint64_t brute_force_jk(int P, int m, int k) {
  std::vector<int> v(2 * k, 1);
  std::uint64_t count = 0;
  while (true) {
    bool ok = true;
    for (int j = 1; j <= m && ok; ++j) {
      long long s = 0;
      for (int i = 0; i < k; ++i) {
        long long x = 1, y = 1;
        for (int e = 0; e < j; ++e) {
          x *= v[i];
          y *= v[k + i];
        }
        s += x - y;
      }
      ok = s == 0;
    }
    count += ok;
    int pos = 0;
    while (pos < 2 * k && v[pos] == P) v[pos++] = 1;
    if (pos == 2 * k) break;
    ++v[pos];
  }
  return count;
}

std::complex<long double> naive_weyl(long long P, const std::vector<double>& a) {
  std::complex<long double> s = 0;
  for (long long x = 1; x <= P; ++x) {
    long double phase = 0, xp = 1;
    for (double c : a) {
      xp *= x;
      phase += static_cast<long double>(c) * xp;
    }
    phase -= std::floor(phase);
    s += std::polar(1.0L, 2.0L * std::numbers::pi_v<long double> * phase);
  }
  return s;
}

}  // namespace

TEST_SUITE("vinogradov") {
  TEST_CASE("Weyl sums") {
    CHECK(std::abs(weyl_sum(7, VinogradovPolynomial({0.0, 0.0})) - 7.0) < 1e-12);
    // Linear phase 1/2: alternating signs.
    CHECK(std::abs(weyl_sum(10, VinogradovPolynomial({0.5})) - 0.0) < 1e-12);
    CHECK(std::abs(weyl_sum(11, VinogradovPolynomial({0.5})) + 1.0) < 1e-12);
    const std::vector<double> a = {0.5, 0.25, 0.125};
    for (long long P : {10LL, 100LL, 1000LL}) {
      auto ref = naive_weyl(P, a);
      auto got = weyl_sum(P, VinogradovPolynomial(a));
      CHECK(std::abs(got - std::complex<double>(ref)) < 1e-9 * P);
      CHECK(std::abs(got) <= P + 1e-9);
    }
    CHECK_THROWS_AS(weyl_sum(0, VinogradovPolynomial(a)), InvalidInput);
  }

  TEST_CASE("Diophantine counts against brute force") {
    CHECK(jk_count(3, 3, 2).count == 15);
    for (int P = 1; P <= 5; ++P)
      for (int m = 2; m <= 3; ++m)
        for (int k = 1; k <= 3; ++k) {
          const auto expected = brute_force_jk(P, m, k);
          CHECK(jk_count(P, m, k, CountMethod::enumerate).count == expected);
          CHECK(jk_count(P, m, k, CountMethod::signature_histogram).count == expected);
        }
    // When m >= k only permutations solve the system: J_2 = 2 P^2 - P.
    for (int P = 2; P <= 30; P += 7) CHECK(jk_count(P, 3, 2).count == static_cast<std::uint64_t>(2 * P * P - P));
  }

  TEST_CASE("count invariants and limits") {
    for (int P = 2; P <= 6; ++P)
      for (int k = 1; k <= 3; ++k) {
        const auto J = jk_count(P, 2, k).count;
        CHECK(static_cast<double>(J) >= std::pow(P, k));
        CHECK(static_cast<double>(J) <= std::pow(P, 2 * k));
        CHECK(jk_count(P + 1, 2, k).count >= J);
      }
    CHECK_THROWS_AS(jk_count(50, 3, 4, CountMethod::enumerate), Infeasible);
    CHECK_FALSE(jk_cost(50, 3, 4, CountMethod::enumerate).feasible);
    CHECK(jk_cost(50, 3, 2, CountMethod::signature_histogram).feasible);
    CHECK_THROWS_AS(jk_count(3, 1, 2), InvalidInput);
    CHECK_THROWS_AS(jk_count(0, 3, 2), InvalidInput);
  }

  TEST_CASE("count equals the integral of the Weyl sum power") {
    for (int P : {2, 3, 4})
      for (int k : {1, 2}) {
        bool converged = false;
        const double I = jk_by_integral(P, 2, k, &converged);
        CHECK(converged);
        CHECK(I == doctest::Approx(static_cast<double>(jk_count(P, 2, k).count)).epsilon(1e-8));
      }
  }

  TEST_CASE("Vinogradov constants") {
    auto c = vinogradov_constants(3, 1);
    CHECK(c.delta == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(c.log_c == doctest::Approx(18.0 * std::log(3.0) + 48.0 * std::log(6.0)).epsilon(1e-14));
    for (int m = 3; m <= 6; ++m)
      for (int tau = 1; tau <= 5; ++tau) {
        auto v = vinogradov_constants(m, tau);
        const double d = m * (m + 1) * (1.0 - std::pow(1.0 - 1.0 / m, tau)) / 2.0;
        CHECK(v.delta == doctest::Approx(d).epsilon(1e-13));
        CHECK(v.delta < m * (m + 1) / 2.0);
        if (tau > 1) CHECK(v.delta > vinogradov_constants(m, tau - 1).delta);
      }
    CHECK_THROWS_AS(vinogradov_constants(2, 1), InvalidInput);
  }

  TEST_CASE("mean value bound over small P") {
    std::vector<int> P = {2, 5, 10, 20};
    auto rep = verify_theorem7(P, 3, 1);
    CHECK(rep.all_pass());
    CHECK(*rep.metric("diagonal_ok") == 1.0);
    CHECK(rep.max_statistic() < 0.0);
  }

  TEST_CASE("coefficient box geometry") {
    CoefficientBox box{3, 10.0};
    CHECK(box.half_width(1) == 1.0);
    CHECK(box.half_width(3) == doctest::Approx(100.0));
    CHECK(box.log_volume() == doctest::Approx(3 * std::log(2.0) + 3 * std::log(10.0)));
    CHECK(box.log_prefactor() == doctest::Approx(-3 * std::log(10.0)));
  }

  TEST_CASE("I_k for lattice laws agrees across methods and with the count") {
    // S uniform on {1..P}: I_k = 2^m P^{-2k} J_k(P).
    const int P = 3, m = 2;
    const auto S = laws::lattice_uniform(1, P);
    for (int k : {1, 2}) {
      const double exact = std::pow(2.0, m) * static_cast<double>(jk_count(P, m, k).count) / std::pow(P, 2 * k);
      IkOptions q;
      q.method = IkMethod::unit_cell_quadrature;
      auto iq = ik_estimate(S, P, m, k, q);
      CHECK(iq.value == doctest::Approx(exact).epsilon(1e-8));
      CHECK(iq.inner == "exact");
      for (IkMethod method : {IkMethod::box_plain, IkMethod::box_stratified}) {
        IkOptions o;
        o.method = method;
        o.n_mc = 40000;
        o.seed = 9;
        auto e = ik_estimate(S, P, m, k, o);
        CHECK(std::abs(e.value - exact) <= 3.5 * e.std_error);
      }
    }
    CHECK(remark3_check(3, 3, 2).all_pass());
  }

  TEST_CASE("exact inner expectation") {
    VinogradovPolynomial f({0.3, 0.1});
    auto S = laws::lattice_uniform(1, 4);
    auto v = exact_inner_expectation(S, 4.0, f);
    REQUIRE(v.has_value());
    CHECK(std::abs(*v - std::complex<double>(naive_weyl(4, {0.3, 0.1})) / 4.0) < 1e-12);
    // Uniform density on [-1, 1] with f(x) = a x: E e(a S) = sin(2 pi a) / (2 pi a).
    auto u = exact_inner_expectation(laws::uniform(-1.0, 1.0), 1.0, VinogradovPolynomial({0.3}));
    REQUIRE(u.has_value());
    const double w = 2.0 * std::numbers::pi * 0.3;
    CHECK(std::abs(*u - std::sin(w) / w) < 1e-9);
    CHECK_FALSE(exact_inner_expectation(laws::normal(), 1.0, f).has_value());
  }

  TEST_CASE("concentration function") {
    CHECK(concentration_sup(laws::lattice_uniform(1, 10), ConcentrationMethod::exact) == doctest::Approx(0.1));
    CHECK(concentration_sup(laws::rademacher(), ConcentrationMethod::exact) == doctest::Approx(0.5));
    CHECK(concentration_sup(laws::point_mass(2.0), ConcentrationMethod::exact) == doctest::Approx(1.0));
    const std::size_t n = 200000;
    const double emp = concentration_sup(laws::uniform(-4.0, 4.0), ConcentrationMethod::empirical, n, 3);
    CHECK(std::abs(emp - 0.125) <= 2.0 / std::sqrt(static_cast<double>(n)));
    const double nor = concentration_sup(laws::normal(), ConcentrationMethod::empirical, n, 4);
    CHECK(std::abs(nor - (std::erf(0.5 / std::sqrt(2.0)))) <= 2.0 / std::sqrt(static_cast<double>(n)));
    CHECK_THROWS_AS(concentration_sup(Distribution("bare", [](Rng& r) { return uniform01(r); }),
                                      ConcentrationMethod::exact),
                    InvalidInput);
  }

  TEST_CASE("ratio checks for lattice and continuous families") {
    IkOptions q;
    q.method = IkMethod::unit_cell_quadrature;
    std::vector<double> P = {2, 3, 4};
    auto lat = [](double p) { return laws::lattice_uniform(1, static_cast<long long>(p)); };
    CHECK(verify_theorem8(lat, P, 3, 1, q).all_pass());
    auto r10 = verify_theorem10(lat, P, 3, 1, q);
    CHECK(r10.all_pass());
    for (auto& row : r10.rows) CHECK(row.statistic == doctest::Approx(8.0).epsilon(1e-6));
    CHECK_THROWS_AS(verify_theorem10(lat, P, 3, 4, q), InvalidInput);
  }

  TEST_CASE("continuous uniform bound") {
    IkOptions o;
    o.method = IkMethod::importance;
    o.n_mc = 20000;
    o.importance_scale = 0.3;
    o.seed = 1;
    auto r = verify_theorem9(32.0, 3, 2, o);
    CHECK(r.all_pass());
    CHECK(*r.metric("rel_se") < 0.1);
    CHECK(theorem9_log_bound(32.0, 3, 2) ==
          doctest::Approx(48 * std::log(2.0) - 9 * std::log(32.0) - std::log(1.0 - 0.75)).epsilon(1e-12));
    CHECK_THROWS_AS(verify_theorem9(16.0, 3, 2, o), InvalidInput);
    CHECK_THROWS_AS(verify_theorem9(32.0, 3, 1, o), InvalidInput);
  }

  TEST_CASE("I_k is reproducible for a fixed seed") {
    IkOptions o;
    o.n_mc = 4000;
    o.seed = 5;
    auto a = ik_estimate(laws::uniform(-2.0, 2.0), 2.0, 2, 1, o);
    auto b = ik_estimate(laws::uniform(-2.0, 2.0), 2.0, 2, 1, o);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
  }
}
