#include "polyrand/estimate.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "polyrand/error.hpp"

namespace polyrand {

RealEstimate jackknife_mean(std::span<const double> sums, std::span<const std::size_t> counts) {
  if (sums.size() != counts.size() || sums.empty())
    throw InvalidInput("jackknife_mean: block sums and counts must be non-empty and aligned");
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  RealEstimate est;
  est.n_samples = n;
  est.value = total / static_cast<double>(n);
  const std::size_t blocks = sums.size();
  if (blocks < 2) return est;
  std::vector<double> loo(blocks);
  double mean_loo = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    loo[b] = (total - sums[b]) / static_cast<double>(n - counts[b]);
    mean_loo += loo[b];
  }
  mean_loo /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  est.std_error = std::sqrt(ss * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  return est;
}

ComplexEstimate jackknife_mean(std::span<const std::complex<double>> sums,
                               std::span<const std::size_t> counts) {
  std::vector<double> re(sums.size()), im(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    re[i] = sums[i].real();
    im[i] = sums[i].imag();
  }
  const auto r = jackknife_mean(re, counts);
  const auto i = jackknife_mean(im, counts);
  return {{r.value, i.value}, std::hypot(r.std_error, i.std_error), r.n_samples};
}

}  // namespace polyrand
