#pragma once

#include "hetsense/spectrum_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsense {

// ---------------------------------------------------------------------------
// Measurement lower bound
// ---------------------------------------------------------------------------

/// Hypothesized per-block RIP constants and average block sparsities.
struct RipProfile {
  std::vector<double> sparsities; ///< kbar_i > 0
  std::vector<double> deltas;     ///< delta_i in (0, 1/2]

  void validate() const {
    if (sparsities.empty() || sparsities.size() != deltas.size()) {
      throw std::invalid_argument("RipProfile: need one delta per block sparsity");
    }
    for (std::size_t i = 0; i < sparsities.size(); ++i) {
      if (!(sparsities[i] > 0.0)) {
        throw std::invalid_argument("RipProfile: block sparsity " + std::to_string(i) +
                                    " must be positive");
      }
      if (!(deltas[i] > 0.0 && deltas[i] <= 0.5)) {
        throw std::invalid_argument("RipProfile: delta " + std::to_string(i) +
                                    " must lie in (0, 1/2]");
      }
    }
  }

  /// Same delta for every block.
  static RipProfile uniform(std::vector<double> sparsities, double delta) {
    RipProfile p{std::move(sparsities), {}};
    p.deltas.assign(p.sparsities.size(), delta);
    return p;
  }
};

enum class LogBase { natural, binary };

struct MeasurementBound {
  double constant = 0.0; ///< C multiplying kbar log(n / kbar)
  double value = 0.0;    ///< real-valued lower bound on m
  std::size_t ceiling = 0;
};

/// m >= C kbar log(n/kbar) with
///   C = 1 / (2 log[(sum_i sqrt(2 kbar_i (1+d_i)) + max_i tau_i) / min_i tau_i]),
///   tau_i = sqrt(kbar_i (1 - d_i) / 8),  kbar = sum_i kbar_i.
/// Both logarithms share a base, so the result does not depend on it.
inline MeasurementBound min_measurements(const RipProfile& profile, std::size_t n,
                                         LogBase base = LogBase::natural) {
  profile.validate();
  auto log_ = [base](double v) { return base == LogBase::natural ? std::log(v) : std::log2(v); };

  double kbar = 0.0;
  double spread = 0.0;
  double tau_max = 0.0;
  double tau_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.sparsities.size(); ++i) {
    const double k = profile.sparsities[i];
    const double d = profile.deltas[i];
    kbar += k;
    spread += std::sqrt(2.0 * k * (1.0 + d));
    const double tau = std::sqrt(k * (1.0 - d) / 8.0);
    tau_max = std::max(tau_max, tau);
    tau_min = std::min(tau_min, tau);
  }
  if (!(tau_min > 0.0)) {
    throw std::domain_error("min_measurements: some kbar_i (1 - delta_i) vanishes");
  }
  if (!(kbar < static_cast<double>(n))) {
    throw std::invalid_argument("min_measurements: total sparsity must be below n");
  }
  MeasurementBound out;
  out.constant = 1.0 / (2.0 * log_((spread + tau_max) / tau_min));
  out.value = out.constant * kbar * log_(static_cast<double>(n) / kbar);
  out.ceiling = static_cast<std::size_t>(std::ceil(out.value - 1e-12));
  return out;
}

/// One reading of which sparsities enter the measurement bound.
struct MeasurementInterpretation {
  std::string name;
  std::string description;
  RipProfile profile;
  MeasurementBound bound;
};

/// Evaluates the measurement bound for the block layout under the readings
/// that are plausible for a design sparsity level k0:
///   - per-block average sparsities n_i p_i,
///   - k0 treated as a single homogeneous block,
///   - k0 split across blocks in proportion to n_i p_i.
/// Blocks with zero average sparsity are dropped.
inline std::vector<MeasurementInterpretation>
measurement_interpretations(const BlockSpec& spec, double k0, double delta) {
  std::vector<double> kbar;
  for (std::size_t g = 0; g < spec.num_blocks(); ++g) {
    if (spec.average_sparsity(g) > 0.0) kbar.push_back(spec.average_sparsity(g));
  }
  const double total = spec.expected_occupancy();
  const std::size_t n = spec.num_bands();

  std::vector<MeasurementInterpretation> out;
  auto add = [&](std::string name, std::string description, std::vector<double> sparsities) {
    RipProfile p = RipProfile::uniform(std::move(sparsities), delta);
    MeasurementBound b = min_measurements(p, n);
    out.push_back({std::move(name), std::move(description), std::move(p), b});
  };
  if (!kbar.empty()) {
    add("block_averages", "kbar_i = n_i p_i for every occupied block", kbar);
  }
  add("single_block_k0", "one block holding the design sparsity k0", {k0});
  if (!kbar.empty() && total > 0.0) {
    std::vector<double> split;
    for (double k : kbar) split.push_back(k0 * k / total);
    add("k0_proportional", "k0 split across blocks in proportion to n_i p_i", split);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binomial comparisons between blocks
// ---------------------------------------------------------------------------

namespace detail {

inline double log_binomial_pmf(std::size_t n, std::size_t k, double q) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (q <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (q >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
         kd * std::log(q) + (nd - kd) * std::log1p(-q);
}

inline double binomial_pmf(std::size_t n, std::size_t k, double q) {
  return std::exp(log_binomial_pmf(n, k, q));
}

} // namespace detail

/// Probability that block i realizes fewer occupied bands than block j,
///   sum_{k=1}^{min(n_i,n_j)} sum_{l=0}^{k-1} Bin(n_i, l; q_i) Bin(n_j, k; q_j).
/// The sum stops at min(n_i, n_j), so when n_j > n_i the outcomes
/// X_j > n_i are not counted and the value is below Pr(X_i < X_j).
inline double swap_probability(std::size_t n_i, double q_i, std::size_t n_j, double q_j) {
  if (!(q_i >= 0.0 && q_i <= 1.0 && q_j >= 0.0 && q_j <= 1.0)) {
    throw std::invalid_argument("swap_probability: probabilities must lie in [0,1]");
  }
  const std::size_t top = std::min(n_i, n_j);
  double total = 0.0;
  double cdf_i = 0.0; // Pr(X_i <= k - 1)
  for (std::size_t k = 1; k <= top; ++k) {
    cdf_i += detail::binomial_pmf(n_i, k - 1, q_i);
    total += std::min(cdf_i, 1.0) * detail::binomial_pmf(n_j, k, q_j);
  }
  return std::clamp(total, 0.0, 1.0);
}

enum class OrderingPolicy {
  reorder, ///< sort blocks by n_i q_i descending and report that it happened
  strict,  ///< reject unordered input
};

struct SuccessProbability {
  double probability = 1.0;
  bool reordered = false;
  /// Sum of pairwise swap probabilities before clamping; can exceed 1.
  double violation_mass = 0.0;
};

/// Lower bound on the probability that the weighted program does at least as
/// well as the unweighted one: one minus the pairwise swap probabilities over
/// all block pairs i < j, for blocks ordered by n_i q_i descending. The
/// per-band probabilities of the layout serve as q_i.
inline SuccessProbability theorem1_success_probability(const BlockSpec& spec,
                                                       OrderingPolicy policy =
                                                           OrderingPolicy::reorder) {
  std::vector<Block> blocks = spec.blocks();
  auto mass = [](const Block& b) { return static_cast<double>(b.size) * b.probability; };
  SuccessProbability out;
  const bool ordered = std::is_sorted(blocks.begin(), blocks.end(),
                                      [&](const Block& a, const Block& b) { return mass(a) > mass(b); });
  if (!ordered) {
    if (policy == OrderingPolicy::strict) {
      throw std::invalid_argument(
          "theorem1_success_probability: blocks must be ordered by n_i q_i descending");
    }
    std::stable_sort(blocks.begin(), blocks.end(),
                     [&](const Block& a, const Block& b) { return mass(a) > mass(b); });
    out.reordered = true;
  }
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < blocks.size(); ++j) {
      out.violation_mass += swap_probability(blocks[i].size, blocks[i].probability,
                                             blocks[j].size, blocks[j].probability);
    }
  }
  out.probability = std::clamp(1.0 - out.violation_mass, 0.0, 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Stable-recovery constants
// ---------------------------------------------------------------------------

struct StabilityConstants {
  double c0 = 0.0; ///< multiplies eps
  double c1 = 0.0; ///< multiplies sigma_k(x) / sqrt(k)
};

/// C0 = 2(1 + 1/sqrt(a)) / (sqrt(1 - d1) - sqrt(1 + d0)/sqrt(a)),
/// C1 = (2 sqrt(1 - d1) + sqrt(1 + d0)/sqrt(a)) / (sqrt(a) sqrt(1 - d1) - sqrt(1 + d0)),
/// where d0 = delta_{ak} and d1 = delta_{(a+1)k}. Requires a > 1 and
/// d0 + a d1 < a - 1.
inline StabilityConstants stability_constants(double delta_ak, double delta_a1k, double a) {
  if (!(a > 1.0)) throw std::invalid_argument("stability_constants: a must exceed 1");
  if (!(delta_ak >= 0.0 && delta_ak < 1.0 && delta_a1k >= 0.0 && delta_a1k < 1.0)) {
    throw std::invalid_argument("stability_constants: RIP constants must lie in [0,1)");
  }
  if (!(delta_ak + a * delta_a1k < a - 1.0)) {
    throw std::invalid_argument(
        "stability_constants: hypothesis delta_ak + a*delta_(a+1)k < a - 1 violated");
  }
  const double sa = std::sqrt(a);
  const double lo = std::sqrt(1.0 - delta_a1k);
  const double hi = std::sqrt(1.0 + delta_ak);
  const double den0 = lo - hi / sa;
  const double den1 = sa * lo - hi;
  if (!(den0 > 0.0) || !(den1 > 0.0)) {
    throw std::domain_error("stability_constants: vanishing denominator");
  }
  return {2.0 * (1.0 + 1.0 / sa) / den0, (2.0 * lo + hi / sa) / den1};
}

} // namespace hetsense
