#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace hetsense::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Half-width of the two-sided Student-t confidence interval for the mean.
inline double ci_halfwidth(std::span<const double> v, double level = 0.95) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const boost::math::students_t dist(static_cast<double>(v.size() - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return t * stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

struct TTest {
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
};

/// One-sample t-test of H0: mean(v) = 0 against H1: mean(v) > 0. Applied to
/// paired differences this is the one-sided paired t-test.
inline TTest t_test_greater(std::span<const double> v) {
  TTest out;
  if (v.size() < 2) return out;
  const double sd = stddev(v);
  if (!(sd > 0.0)) return out;
  out.statistic = mean(v) / (sd / std::sqrt(static_cast<double>(v.size())));
  const boost::math::students_t dist(static_cast<double>(v.size() - 1));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

} // namespace hetsense::stats
