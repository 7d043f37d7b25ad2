#include "polyrand/distribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "polyrand/charfun.hpp"
#include "polyrand/error.hpp"
#include "polyrand/parallel.hpp"

namespace polyrand {

Distribution::Distribution(std::string name, Sampler sampler)
    : name_(std::move(name)), sampler_(std::move(sampler)) {
  if (!sampler_) throw InvalidInput("Distribution: sampler must be callable");
}

std::vector<double> Distribution::sample(std::size_t n, std::uint64_t seed) const {
  std::vector<double> out(n);
  const auto chunking = make_chunking(n);
  parallel_for(chunking.chunks, [&](std::size_t c) {
    Rng rng = make_rng(derive_seed(seed, {c}));
    for (std::size_t i = chunking.begin(c); i < chunking.end(c); ++i) out[i] = sampler_(rng);
  });
  return out;
}

Distribution Distribution::with_cf(CharacteristicFn cf) const {
  Distribution d = *this;
  d.cf_ = std::move(cf);
  return d;
}

Distribution Distribution::with_unit_concentration(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidInput("unit concentration must lie in (0, 1]");
  Distribution d = *this;
  d.unit_concentration_ = q;
  return d;
}

Distribution Distribution::with_support_bound(double bound) const {
  Distribution d = *this;
  d.support_bound_ = bound;
  return d;
}

Distribution Distribution::with_atoms(std::vector<Atom> atoms) const {
  Distribution d = *this;
  d.unit_concentration_ = atoms_unit_concentration(atoms);
  d.atoms_ = std::move(atoms);
  return d;
}

Distribution Distribution::with_uniform_density(Interval support) const {
  Distribution d = *this;
  d.uniform_ = support;
  return d;
}

Distribution Distribution::with_symmetry(bool symmetric) const {
  Distribution d = *this;
  d.symmetric_ = symmetric;
  return d;
}

double atoms_unit_concentration(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidInput("atoms_unit_concentration: empty atom list");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  // The supremum over (a, a+1] is attained with a+1 at an atom.
  double best = 0.0, window = 0.0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < atoms.size(); ++hi) {
    window += atoms[hi].p;
    while (atoms[lo].x <= atoms[hi].x - 1.0) window -= atoms[lo++].p;
    best = std::max(best, window);
  }
  return std::min(best, 1.0);
}

namespace laws {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kCantorDigits = 40;
}  // namespace

Distribution point_mass(double x) {
  return Distribution("point_mass", [x](Rng&) { return x; })
      .with_cf([x](double t) { return std::polar(1.0, t * x); })
      .with_atoms({{x, 1.0}})
      .with_support_bound(std::abs(x))
      .with_symmetry(x == 0.0);
}

Distribution normal(double mean, double sd) {
  if (!(sd > 0.0)) throw InvalidInput("normal: sd must be positive");
  const double q = std::erf(0.5 / (sd * std::numbers::sqrt2));
  return Distribution("normal",
                      [mean, sd](Rng& rng) { return std::normal_distribution<double>(mean, sd)(rng); })
      .with_cf([mean, sd](double t) { return std::polar(std::exp(-0.5 * sd * sd * t * t), mean * t); })
      .with_unit_concentration(q)
      .with_symmetry(mean == 0.0);
}

Distribution uniform(double lo, double hi) {
  if (!(hi > lo)) throw InvalidInput("uniform: need lo < hi");
  return Distribution("uniform", [lo, hi](Rng& rng) { return lo + (hi - lo) * uniform01(rng); })
      .with_cf([lo, hi](double t) -> std::complex<double> {
        if (t == 0.0) return 1.0;
        const double half = 0.5 * t * (hi - lo);
        return std::polar(std::sin(half) / half, 0.5 * t * (hi + lo));
      })
      .with_unit_concentration(std::min(1.0, 1.0 / (hi - lo)))
      .with_support_bound(std::max(std::abs(lo), std::abs(hi)))
      .with_uniform_density({lo, hi})
      .with_symmetry(lo == -hi);
}

Distribution discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidInput("discrete: empty atom list");
  double total = 0.0, bound = 0.0;
  for (auto& a : atoms) {
    if (!(a.p >= 0.0)) throw InvalidInput("discrete: negative probability");
    total += a.p;
    bound = std::max(bound, std::abs(a.x));
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("discrete: probabilities must sum to 1");
  std::vector<double> cumulative;
  cumulative.reserve(atoms.size());
  double acc = 0.0;
  for (auto& a : atoms) cumulative.push_back(acc += a.p);
  auto sampler = [atoms, cumulative](Rng& rng) {
    const double u = uniform01(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), atoms.size() - 1);
    return atoms[idx].x;
  };
  auto cf = [atoms](double t) {
    std::complex<double> s = 0.0;
    for (auto& a : atoms) s += a.p * std::polar(1.0, t * a.x);
    return s;
  };
  return Distribution("discrete", sampler).with_cf(cf).with_atoms(atoms).with_support_bound(bound);
}

Distribution lattice_uniform(long long lo, long long hi) {
  if (hi < lo) throw InvalidInput("lattice_uniform: need lo <= hi");
  const auto count = static_cast<std::size_t>(hi - lo + 1);
  std::vector<Atom> atoms;
  atoms.reserve(count);
  for (long long x = lo; x <= hi; ++x) atoms.push_back({static_cast<double>(x), 1.0 / static_cast<double>(count)});
  auto sampler = [lo, count](Rng& rng) {
    return static_cast<double>(lo + static_cast<long long>(std::uniform_int_distribution<std::size_t>(0, count - 1)(rng)));
  };
  auto cf = [lo, hi, count](double t) {
    std::complex<double> s = 0.0;
    for (long long x = lo; x <= hi; ++x) s += std::polar(1.0, t * static_cast<double>(x));
    return s / static_cast<double>(count);
  };
  return Distribution("lattice_uniform", sampler)
      .with_cf(cf)
      .with_atoms(std::move(atoms))
      .with_support_bound(static_cast<double>(std::max(std::llabs(lo), std::llabs(hi))))
      .with_symmetry(lo == -hi);
}

Distribution rademacher() {
  return Distribution("rademacher", [](Rng& rng) { return random_sign(rng); })
      .with_cf([](double t) { return std::complex<double>(std::cos(t), 0.0); })
      .with_atoms({{-1.0, 0.5}, {1.0, 0.5}})
      .with_support_bound(1.0)
      .with_symmetry(true);
}

Distribution cantor() { return cantor_power(1).with_support_bound(std::numbers::pi); }

Distribution cantor_power(int copies) {
  if (copies < 1) throw InvalidInput("cantor_power: need at least one copy");
  const int words = (copies + 63) / 64;
  auto sampler = [copies, words](Rng& rng) {
    // Digit j of the sum is 2*Binomial(copies, 1/2) - copies.
    double acc = 0.0;
    for (int j = kCantorDigits; j >= 1; --j) {
      int ones = 0;
      for (int w = 0; w < words; ++w) {
        std::uint64_t bits = rng();
        const int used = std::min(64, copies - 64 * w);
        if (used < 64) bits &= (std::uint64_t{1} << used) - 1;
        ones += std::popcount(bits);
      }
      acc = (acc + static_cast<double>(2 * ones - copies)) / 3.0;
    }
    return kTwoPi * acc;
  };
  auto cf = [copies](double t) {
    return std::complex<double>(std::pow(charfun::cantor_cf(t, 1e-15), copies), 0.0);
  };
  return Distribution(copies == 1 ? "cantor" : "cantor_power", sampler)
      .with_cf(cf)
      .with_support_bound(std::numbers::pi * copies)
      .with_symmetry(true);
}

Distribution laplace(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("laplace: scale must be positive");
  return Distribution("laplace",
                      [scale](Rng& rng) {
                        return random_sign(rng) * std::exponential_distribution<double>(1.0 / scale)(rng);
                      })
      .with_cf([scale](double t) { return std::complex<double>(1.0 / (1.0 + scale * scale * t * t), 0.0); })
      .with_unit_concentration(1.0 - std::exp(-0.5 / scale))
      .with_symmetry(true);
}

Distribution root_exponential() {
  // sqrt|X| ~ Gamma(2, 1) for the density (1/4) exp(-sqrt|x|).
  return Distribution("root_exponential",
                      [](Rng& rng) {
                        const double v = std::gamma_distribution<double>(2.0, 1.0)(rng);
                        return random_sign(rng) * v * v;
                      })
      .with_symmetry(true);
}

}  // namespace laws

double normalized_sum(const Distribution& dist, int n, Rng& rng) {
  if (n < 1) throw InvalidInput("normalized_sum: n must be at least 1");
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += dist.draw(rng);
  return n == 1 ? s : s / std::sqrt(static_cast<double>(n));
}

double normalized_sum(const Distribution& dist, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return normalized_sum(dist, n, rng);
}

}  // namespace polyrand
