#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace polyrand {

/// Monte Carlo estimate of a complex expectation.
struct ComplexEstimate {
  std::complex<double> value{0.0, 0.0};
  double std_error = 0.0;
  std::size_t n_samples = 1;
};

struct RealEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 1;
};

/// Delete-one-block jackknife for a sample mean. `sums[b]` and `counts[b]`
/// describe block b; at least two blocks are needed for a standard error.
RealEstimate jackknife_mean(std::span<const double> sums, std::span<const std::size_t> counts);

/// Complex version; std_error is sqrt(se_re^2 + se_im^2).
ComplexEstimate jackknife_mean(std::span<const std::complex<double>> sums,
                               std::span<const std::size_t> counts);

}  // namespace polyrand
