#pragma once

#include "hetsense/core.hpp"
#include "hetsense/spectrum_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hetsense {

/// Measurement operator y = A x. Entries are i.i.d. +-1/sqrt(m), so every
/// column has unit Euclidean norm.
struct SensingSystem {
  Matrix A;

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
};

namespace detail {

inline double smallest_singular_value(const Matrix& A) {
  // Singular values of a wide matrix equal those of its transpose; the tall
  // orientation keeps the QR preconditioner cheap.
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(A.transpose());
  const auto& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

} // namespace detail

/// Draws a Bernoulli sensing matrix with zero-mean, variance-1/m entries.
/// Draws that are numerically rank deficient (smallest singular value below
/// 1e-10) are discarded and redrawn; for m << n this practically never
/// happens, for tiny square systems it does.
inline SensingSystem generate_sensing_matrix(std::size_t m, std::size_t n, Rng& rng) {
  if (m < 1 || m > n) {
    throw std::invalid_argument("generate_sensing_matrix: need 1 <= m <= n (got m=" +
                                std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  const double level = 1.0 / std::sqrt(static_cast<double>(m));
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Matrix A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        A(i, j) = (rng() >> 63) != 0 ? level : -level;
      }
    }
    if (detail::smallest_singular_value(A) > 1e-10) return SensingSystem{std::move(A)};
  }
  throw std::runtime_error("generate_sensing_matrix: could not draw a full-rank matrix");
}

enum class SnrMode {
  sensing,  ///< ||A x||^2 / ||eta||^2
  received, ///< ||x||^2 / ||eta||^2
};

inline const char* to_string(SnrMode mode) {
  return mode == SnrMode::sensing ? "sensing" : "received";
}

/// Either a fixed noise level or an SNR target in dB. A target calibrates the
/// per-component noise deviation so that the SNR holds in expectation.
struct NoiseTarget {
  enum class Kind { sigma, snr_db } kind = Kind::sigma;
  double value = 0.0;
  SnrMode mode = SnrMode::sensing;

  static NoiseTarget sigma(double s) { return {Kind::sigma, s, SnrMode::sensing}; }
  static NoiseTarget snr(double db, SnrMode mode = SnrMode::sensing) {
    return {Kind::snr_db, db, mode};
  }
};

/// Residual budget eps = sigma * sqrt(m + c * sqrt(2m)); with c = 2 the
/// ground truth is feasible in about 97.7% of draws.
struct EpsilonRule {
  double sd_multiplier = 2.0;

  double operator()(double sigma, std::size_t m) const {
    const double md = static_cast<double>(m);
    return sigma * std::sqrt(std::max(0.0, md + sd_multiplier * std::sqrt(2.0 * md)));
  }
};

struct MeasurementSet {
  Vector y;
  Vector eta;
  double noise_sigma = 0.0;
  double epsilon = 0.0;

  /// Analytic E||eta||^2 = m sigma^2.
  double noise_energy_mean() const {
    return static_cast<double>(y.size()) * noise_sigma * noise_sigma;
  }
};

inline MeasurementSet acquire_measurements(const SensingSystem& sys,
                                           const SpectrumInstance& inst,
                                           const NoiseTarget& target, Rng& rng,
                                           const EpsilonRule& eps_rule = {}) {
  if (static_cast<std::size_t>(sys.cols()) != inst.num_bands()) {
    throw std::invalid_argument("acquire_measurements: matrix has " +
                                std::to_string(sys.cols()) + " columns but instance has " +
                                std::to_string(inst.num_bands()) + " bands");
  }
  const auto m = static_cast<std::size_t>(sys.rows());
  const Vector clean = sys.A * inst.x;

  double sigma = 0.0;
  if (target.kind == NoiseTarget::Kind::sigma) {
    if (!(target.value >= 0.0)) {
      throw std::invalid_argument("acquire_measurements: noise sigma must be >= 0");
    }
    sigma = target.value;
  } else {
    const double power = target.mode == SnrMode::sensing ? clean.squaredNorm()
                                                         : inst.x.squaredNorm();
    if (!(power > 0.0)) {
      throw std::domain_error("acquire_measurements: SNR target is undefined for a zero signal");
    }
    const double ratio = std::pow(10.0, target.value / 10.0);
    sigma = std::sqrt(power / (static_cast<double>(m) * ratio));
  }

  MeasurementSet out;
  out.eta = Vector::Zero(static_cast<Eigen::Index>(m));
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index i = 0; i < out.eta.size(); ++i) out.eta[i] = normal(rng);
  }
  out.y = clean + out.eta;
  out.noise_sigma = sigma;
  out.epsilon = eps_rule(sigma, m);
  return out;
}

/// 10 log10(||x||^2 / ||eta||^2).
inline double received_snr(const SpectrumInstance& inst, const Vector& eta) {
  const double noise = eta.squaredNorm();
  if (!(noise > 0.0)) throw std::domain_error("received_snr: zero noise power");
  return 10.0 * std::log10(inst.x.squaredNorm() / noise);
}

/// 10 log10(||A x||^2 / ||eta||^2).
inline double sensing_snr(const SensingSystem& sys, const SpectrumInstance& inst,
                          const Vector& eta) {
  const double noise = eta.squaredNorm();
  if (!(noise > 0.0)) throw std::domain_error("sensing_snr: zero noise power");
  return 10.0 * std::log10((sys.A * inst.x).squaredNorm() / noise);
}

} // namespace hetsense
