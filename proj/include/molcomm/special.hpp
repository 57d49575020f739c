#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "molcomm/types.hpp"

namespace molcomm {

/// 2Q(a) written through erfc. a = +inf gives 0.
template <typename Scalar>
Scalar two_q(Scalar a) {
  using std::erfc;
  using std::sqrt;
  if (std::isinf(a)) return a > 0 ? Scalar(0) : Scalar(2);
  return erfc(a / sqrt(Scalar(2)));
}

template <typename Scalar>
Scalar q_function(Scalar a) {
  return two_q(a) / Scalar(2);
}

/// Fraction of released molecules that have hit the receiver by elapsed time t.
/// Zero at t = 0, where the Q argument is +inf.
template <typename Scalar>
Scalar cumulative_hit(Scalar rho, Scalar t) {
  using std::sqrt;
  if (t <= Scalar(0)) return Scalar(0);
  return two_q(rho / sqrt(t));
}

template <typename Scalar>
Scalar log_poisson_pmf(Count y, Scalar mean) {
  using std::lgamma;
  using std::log;
  if (y < 0) return -std::numeric_limits<Scalar>::infinity();
  if (mean == Scalar(0)) return y == 0 ? Scalar(0) : -std::numeric_limits<Scalar>::infinity();
  const auto k = static_cast<Scalar>(y);
  return k * log(mean) - mean - lgamma(k + Scalar(1));
}

/// P[Y <= y] for Y ~ Poi(mean), by direct pmf summation.
template <typename Scalar>
Scalar poisson_cdf(Count y, Scalar mean) {
  using std::exp;
  using std::sqrt;
  if (y < 0) return Scalar(0);
  // Beyond ~40 standard deviations above the mean the remaining mass is below double precision.
  if (static_cast<Scalar>(y) > mean + Scalar(40) * sqrt(mean) + Scalar(40)) return Scalar(1);
  Scalar total(0);
  for (Count k = 0; k <= y; ++k) total += exp(log_poisson_pmf(k, mean));
  return total < Scalar(1) ? total : Scalar(1);
}

}  // namespace molcomm
