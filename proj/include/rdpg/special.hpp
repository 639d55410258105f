#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rdpg/error.hpp"

namespace rdpg {

/// CDF of N(0, variance) at z.
inline double normal_cdf(double z, double variance = 1.0) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0 * variance));
}

/// Regularized lower incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error(ErrorKind::DomainError, "gamma shape must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(a, x);
}

inline double chi_square_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

/// Two-degree-of-freedom chi-square quantile (closed form).
inline double chi_square2_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::DomainError, "level must be in (0,1)");
  return -2.0 * std::log1p(-level);
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of `samples`
/// and a continuous reference CDF.
template <class Cdf>
double ks_statistic(std::span<const double> samples, Cdf&& cdf) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "KS statistic of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace rdpg
