#pragma once

#include "hetsense/core.hpp"
#include "hetsense/spectrum_model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hetsense {

/// Inverse of the Gaussian tail Q(t) = Pr(N(0,1) > t).
inline double inverse_q(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_q: p must lie in (0,1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Energy-detector threshold
///   lambda = (E||eta||^2 / m) (1 + Q^{-1}(pf) / sqrt(1/2)).
inline double detection_threshold(double noise_energy_mean, std::size_t m, double pf_target) {
  if (m < 1) throw std::invalid_argument("detection_threshold: m must be >= 1");
  if (!(pf_target > 0.0 && pf_target < 1.0)) {
    throw std::domain_error("detection_threshold: pf_target must lie in (0,1)");
  }
  return noise_energy_mean / static_cast<double>(m) *
         (1.0 + inverse_q(pf_target) / std::sqrt(0.5));
}

/// Raw outcome counts; rates pool over bands (and over trials when merged).
struct DetectionCounts {
  std::size_t detected = 0;     ///< occupied and declared occupied
  std::size_t occupied = 0;
  std::size_t false_alarms = 0; ///< vacant and declared occupied
  std::size_t vacant = 0;

  DetectionCounts& operator+=(const DetectionCounts& o) {
    detected += o.detected;
    occupied += o.occupied;
    false_alarms += o.false_alarms;
    vacant += o.vacant;
    return *this;
  }

  std::optional<double> pd() const {
    if (occupied == 0) return std::nullopt;
    return static_cast<double>(detected) / static_cast<double>(occupied);
  }
  std::optional<double> pf() const {
    if (vacant == 0) return std::nullopt;
    return static_cast<double>(false_alarms) / static_cast<double>(vacant);
  }
};

struct DetectionReport {
  std::vector<std::uint8_t> decisions;
  double lambda = 0.0;
  std::optional<double> pd; ///< absent when no band is occupied
  std::optional<double> pf; ///< absent when no band is vacant
  double pf_target = std::numeric_limits<double>::quiet_NaN();
  DetectionCounts counts;
};

/// Declares band i occupied iff |x_hat_i|^2 >= lambda and scores the
/// decisions against the ground-truth states.
inline DetectionReport decide_and_score(const Vector& x_hat, const SpectrumInstance& truth,
                                        double lambda,
                                        double pf_target = std::numeric_limits<double>::quiet_NaN()) {
  if (static_cast<std::size_t>(x_hat.size()) != truth.num_bands()) {
    throw std::invalid_argument("decide_and_score: length mismatch");
  }
  DetectionReport r;
  r.lambda = lambda;
  r.pf_target = pf_target;
  r.decisions.resize(truth.num_bands());
  for (std::size_t i = 0; i < truth.num_bands(); ++i) {
    const double v = x_hat[static_cast<Eigen::Index>(i)];
    const bool declared = v * v >= lambda;
    r.decisions[i] = declared ? 1 : 0;
    if (truth.states[i]) {
      ++r.counts.occupied;
      if (declared) ++r.counts.detected;
    } else {
      ++r.counts.vacant;
      if (declared) ++r.counts.false_alarms;
    }
  }
  r.pd = r.counts.pd();
  r.pf = r.counts.pf();
  return r;
}

} // namespace hetsense
