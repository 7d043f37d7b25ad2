#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polyrand/rng.hpp"

namespace polyrand {

struct Atom {
  double x;
  double p;
};

/// A sampleable law on the real line, optionally carrying exact structure.
class Distribution {
 public:
  using Sampler = std::function<double(Rng&)>;
  using CharacteristicFn = std::function<std::complex<double>(double)>;
  struct Interval {
    double lo;
    double hi;
  };

  Distribution(std::string name, Sampler sampler);

  const std::string& name() const { return name_; }
  double draw(Rng& rng) const { return sampler_(rng); }

  /// n i.i.d. draws. Chunk c is driven by derive_seed(seed, {c}), so the
  /// result is identical for any worker count.
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

  Distribution with_cf(CharacteristicFn cf) const;
  Distribution with_unit_concentration(double q) const;
  Distribution with_support_bound(double bound) const;
  Distribution with_atoms(std::vector<Atom> atoms) const;
  /// Uniform density on [lo, hi]; enables exact inner expectations.
  Distribution with_uniform_density(Interval support) const;
  Distribution with_symmetry(bool symmetric) const;

  const std::optional<CharacteristicFn>& exact_cf() const { return cf_; }
  std::optional<double> unit_concentration() const { return unit_concentration_; }
  std::optional<double> support_bound() const { return support_bound_; }
  const std::optional<std::vector<Atom>>& atoms() const { return atoms_; }
  std::optional<Interval> uniform_density() const { return uniform_; }
  bool symmetric() const { return symmetric_; }

 private:
  std::string name_;
  Sampler sampler_;
  std::optional<CharacteristicFn> cf_;
  std::optional<double> unit_concentration_;
  std::optional<double> support_bound_;
  std::optional<std::vector<Atom>> atoms_;
  std::optional<Interval> uniform_;
  bool symmetric_ = false;
};

namespace laws {

Distribution point_mass(double x);
Distribution normal(double mean = 0.0, double sd = 1.0);
/// Continuous uniform on [lo, hi].
Distribution uniform(double lo, double hi);
/// Uniform on the integers lo, lo+1, ..., hi.
Distribution lattice_uniform(long long lo, long long hi);
Distribution discrete(std::vector<Atom> atoms);
Distribution rademacher();
/// Law with characteristic function prod_j cos(2 pi 3^{-j} t), i.e.
/// 2 pi sum_j eps_j 3^{-j} with fair signs eps_j.
Distribution cantor();
/// Sum of `copies` independent cantor() draws; characteristic function L^copies.
Distribution cantor_power(int copies);
/// Laplace (symmetrized exponential) with the given scale.
Distribution laplace(double scale = 1.0);
/// Density (1/4) exp(-|x|^{1/2}).
Distribution root_exponential();

}  // namespace laws

/// One draw of S_n = n^{-1/2}(X_1 + ... + X_n).
double normalized_sum(const Distribution& dist, int n, Rng& rng);
double normalized_sum(const Distribution& dist, int n, std::uint64_t seed);

/// Exact sup_a P(a < X <= a + 1) for a finite atom list (sliding window).
double atoms_unit_concentration(std::vector<Atom> atoms);

}  // namespace polyrand
