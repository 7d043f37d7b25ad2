#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "polyrand/characterization.hpp"
#include "polyrand/error.hpp"

using namespace polyrand;
using namespace polyrand::characterization;

namespace {

double double_factorial_odd(int n) {  // (2n-1)!!
  double r = 1.0;
  for (int i = 1; i <= n; ++i) r *= 2 * i - 1;
  return r;
}

}  // namespace

TEST_SUITE("characterization") {
  TEST_CASE("case labels") {
    CHECK(classify(SymmetricQuadraticForm({{0, 1}, {1, 0}})).label == Case::case1);
    CHECK(classify(SymmetricQuadraticForm({{1, 0}, {0, -1}})).label == Case::case2_2_1);
    CHECK(classify(SymmetricQuadraticForm({{2, 2}, {2, -1}})).label == Case::case2_1);
    CHECK(classify(SymmetricQuadraticForm({{1, 1}, {1, -1}})).label == Case::case2_2_2);
    CHECK(classify(SymmetricQuadraticForm({{1, 0, 0}, {0, 1, 0}, {0, 0, -2}})).label == Case::case2_2_1);
    // diag(1, -1, 2): every odd-power sum equals 2^{2k+1}.
    CHECK(classify(SymmetricQuadraticForm({{1, 0, 0}, {0, -1, 0}, {0, 0, 2}})).label == Case::case2_1);
    CHECK(to_string(Case::case2_2_2) == "2.2.2");
    CHECK(to_string(Case::indeterminate) == "indeterminate");
  }

  TEST_CASE("classification is invariant under permutation of coordinates") {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> d(-3, 3);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = 3;
      std::vector<std::vector<double>> A(n, std::vector<double>(n));
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) A[i][j] = A[j][i] = d(gen);
      bool nonzero = false;
      for (auto& r : A)
        for (double v : r) nonzero |= v != 0.0;
      if (!nonzero) continue;
      std::vector<int> p = {2, 0, 1};
      std::vector<std::vector<double>> B(n, std::vector<double>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B[i][j] = A[p[i]][p[j]];
      auto la = classify(SymmetricQuadraticForm(A));
      auto lb = classify(SymmetricQuadraticForm(B));
      CHECK(la.label == lb.label);
      CHECK(la.exact);
      // Negation keeps every label.
      for (auto& r : A)
        for (double& v : r) v = -v;
      CHECK(classify(SymmetricQuadraticForm(A)).label == la.label);
    }
  }

  TEST_CASE("quadratic form construction") {
    CHECK_THROWS_AS(SymmetricQuadraticForm({{1, 2}, {3, 1}}), InvalidInput);
    CHECK_THROWS_AS(SymmetricQuadraticForm({{0, 0}, {0, 0}}), InvalidInput);
    CHECK_THROWS_AS(SymmetricQuadraticForm(std::vector<std::vector<double>>{{1.0}}), InvalidInput);
    auto q = SymmetricQuadraticForm::from_json("[[1, 2], [2, -1]]");
    auto c = SymmetricQuadraticForm::from_csv("1,2\n2,-1\n");
    CHECK(q.matrix() == c.matrix());
    std::vector<double> x = {1.5, -2.0};
    CHECK(q(x) == doctest::Approx(2.25 - 12.0 - 4.0));
    CHECK(q.integer_entries());
  }

  TEST_CASE("moment sequences") {
    auto nrm = MomentSequence::standard_normal(12);
    for (int n = 1; n <= 6; ++n) {
      CHECK(nrm.alpha(2 * n) == doctest::Approx(double_factorial_odd(n)));
      CHECK(nrm.alpha(2 * n - 1) == 0.0);
    }
    CHECK(nrm.even_nonnegative());
    CHECK(nrm.hankel_positive());
    auto re = MomentSequence::root_exponential(8);
    CHECK(re.alpha(2) == doctest::Approx(120.0));
    CHECK(re.alpha(4) == doctest::Approx(362880.0));
    // A two-point law has a singular 3x3 Hankel matrix.
    auto two = MomentSequence::symmetric_from_even({1.0, 1.0, 1.0});
    CHECK_FALSE(two.hankel_positive());
    CHECK_FALSE(MomentSequence::symmetric_from_even({1.0, -1.0}).even_nonnegative());
  }

  TEST_CASE("moments of quadratic forms") {
    auto nrm = MomentSequence::standard_normal(8);
    // Q = Z1 Z2 - Z2 Z3 = Z2 (Z1 - Z3): E Q^2 = 2, E Q^4 = 3 * 12 = 36.
    auto r = quad_moments(SymmetricQuadraticForm({{0, 0.5, 0}, {0.5, 0, -0.5}, {0, -0.5, 0}}), nrm, 4);
    CHECK(r.exact);
    CHECK(r.moments.values == std::vector<double>{0.0, 2.0, 0.0, 36.0});
    // Q = Z1^2 + Z2^2 is chi-square with 2 degrees of freedom: E Q^j = 2^j j!.
    auto c = quad_moments(SymmetricQuadraticForm({{1, 0}, {0, 1}}), nrm, 4);
    CHECK(c.moments.values == std::vector<double>{2.0, 8.0, 48.0, 384.0});
    CHECK_THROWS_AS(quad_moments(SymmetricQuadraticForm({{1, 0}, {0, 1}}), nrm, 5), InvalidInput);
  }

  TEST_CASE("moments match Monte Carlo") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> z;
    SymmetricQuadraticForm Q({{2, 2}, {2, -1}});
    auto m = quad_moments(Q, MomentSequence::standard_normal(4), 2);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
      double x[2] = {z(gen), z(gen)};
      double q = Q(x);
      s1 += q;
      s2 += q * q;
      s4 += q * q * q * q;
    }
    const double mean = s1 / n, second = s2 / n;
    CHECK(std::abs(mean - m.moments.alpha(1)) <= 4.0 * std::sqrt((second - mean * mean) / n));
    CHECK(std::abs(second - m.moments.alpha(2)) <= 4.0 * std::sqrt((s4 / n - second * second) / n));
  }

  TEST_CASE("Carleman trends") {
    auto n = carleman_diagnostic(MomentSequence::standard_normal(80));
    CHECK(n.trend == "divergent");
    CHECK(n.analytic_trend == "bounded");
    CHECK(n.tail_exponent == doctest::Approx(-0.5).epsilon(0.05));
    for (std::size_t i = 1; i < n.partial_sums.size(); ++i) CHECK(n.partial_sums[i] > n.partial_sums[i - 1]);
    std::vector<double> logm;
    for (int k = 1; k <= 60; ++k) logm.push_back(std::lgamma(4.0 * k + 2.0));
    auto r = carleman_diagnostic_log(logm);
    CHECK(r.trend == "convergent");
    CHECK(r.analytic_trend == "unbounded");
    CHECK(r.tail_exponent == doctest::Approx(-2.0).epsilon(0.1));
  }

  TEST_CASE("counterexample law") {
    auto x = counterexample_sampler(laws::normal(), 1.0).sample(200000, 3);
    double sq = 0.0, mean = 0.0, mn = 1e9;
    for (double v : x) {
      mean += v;
      sq += v * v;
      mn = std::min(mn, std::abs(v));
    }
    CHECK(mn >= 1.0);
    CHECK(std::abs(mean / x.size()) < 4.0 * std::sqrt(2.0 / x.size()));
    CHECK(sq / x.size() == doctest::Approx(2.0).epsilon(0.02));
    auto pairs = counterexample_pairs(laws::normal(), 0.5, 1000, 4);
    for (std::size_t i = 0; i < pairs.z.size(); ++i)
      CHECK(pairs.x[i] * pairs.x[i] == doctest::Approx(pairs.z[i] * pairs.z[i] + 0.5));
    CHECK_THROWS_AS(counterexample_sampler(laws::normal(), 0.0), InvalidInput);
    CHECK_THROWS_AS(counterexample_sampler(laws::uniform(0.0, 1.0), 1.0), InvalidInput);
  }

  TEST_CASE("two-sample KS") {
    std::vector<double> a(1000), b(1000);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 0.5);
    auto same = ks_two_sample(a, b);
    CHECK(same.statistic == doctest::Approx(0.001));
    CHECK_FALSE(same.reject_99);
    CHECK(same.critical_99 == doctest::Approx(1.6276 * std::sqrt(2000.0 / 1e6)));
    for (double& v : b) v += 300.0;
    CHECK(ks_two_sample(a, b).reject_99);
  }

  TEST_CASE("counterexample is invisible to the quadratic form") {
    SymmetricQuadraticForm Q({{1, 0}, {0, -1}});
    std::vector<double> t = {0.25, 0.5, 1.0, 2.0};
    CpOptions o;
    o.n_samples = 100000;
    o.seed = 5;
    auto rep = cp_distance(Q, laws::normal(), counterexample_sampler(laws::normal(), 1.0), t, o);
    CHECK(rep.all_pass());
    CHECK(*rep.metric("ks_marginal_reject_99") == 1.0);
    auto self = cp_distance(Q, laws::normal(), laws::normal(), t, o);
    CHECK(self.max_statistic() == 0.0);
    // A form outside the null class does see the difference.
    auto diff = cp_distance(SymmetricQuadraticForm({{1, 0}, {0, 1}}), laws::normal(),
                            counterexample_sampler(laws::normal(), 1.0), t, o);
    CHECK_FALSE(diff.all_pass());
  }

  TEST_CASE("stability under converging laws") {
    SymmetricQuadraticForm Q({{1, 0}, {0, -1}});
    std::vector<int> N = {1, 2, 4, 8, 16, 32};
    StabilityOptions o;
    o.n_samples = 50000;
    o.seed = 2;
    auto rep = stability_experiment(Q, [](int n) { return laws::normal(0.0, 1.0 + 1.0 / n); }, laws::normal(), N, o);
    CHECK(rep.all_pass());
    CHECK(*rep.metric("spearman_q") < 0.0);
    o.metric = StabilityMetric::cf_sup;
    CHECK(stability_experiment(Q, [](int n) { return laws::normal(0.0, 1.0 + 1.0 / n); }, laws::normal(), N, o)
              .all_pass());
  }
}
