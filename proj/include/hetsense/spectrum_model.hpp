#pragma once

#include "hetsense/core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsense {

/// One contiguous group of bands sharing an occupancy probability.
struct Block {
  std::size_t size = 0;
  double probability = 0.0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Heterogeneous wideband layout: an ordered list of disjoint, contiguous
/// blocks. Band indices run over the concatenation of the blocks.
class BlockSpec {
public:
  BlockSpec() = default;

  explicit BlockSpec(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) {
      throw std::invalid_argument("BlockSpec: at least one block is required");
    }
    offsets_.reserve(blocks_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      if (b.size == 0) {
        throw std::invalid_argument("BlockSpec: block " + std::to_string(i) +
                                    " has zero bands");
      }
      if (!(b.probability >= 0.0 && b.probability <= 1.0)) {
        throw std::invalid_argument("BlockSpec: block " + std::to_string(i) +
                                    " probability outside [0,1]");
      }
      offsets_.push_back(offsets_.back() + b.size);
    }
  }

  std::size_t num_blocks() const { return blocks_.size(); }
  std::size_t num_bands() const { return offsets_.empty() ? 0 : offsets_.back(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }

  std::size_t block_begin(std::size_t i) const { return offsets_.at(i); }
  std::size_t block_end(std::size_t i) const { return offsets_.at(i + 1); }

  std::size_t block_of(std::size_t band) const {
    if (band >= num_bands()) {
      throw std::out_of_range("BlockSpec: band index out of range");
    }
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), band);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  /// Expected number of occupied bands in block i, n_i * p_i.
  double average_sparsity(std::size_t i) const {
    const Block& b = block(i);
    return static_cast<double>(b.size) * b.probability;
  }

  /// Expected number of occupied bands over the whole wideband.
  double expected_occupancy() const {
    double s = 0.0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) s += average_sparsity(i);
    return s;
  }

  std::vector<double> band_probabilities() const {
    std::vector<double> p;
    p.reserve(num_bands());
    for (const Block& b : blocks_) p.insert(p.end(), b.size, b.probability);
    return p;
  }

  friend bool operator==(const BlockSpec& a, const BlockSpec& b) {
    return a.blocks_ == b.blocks_;
  }

private:
  std::vector<Block> blocks_;
  std::vector<std::size_t> offsets_;
};

/// How a complex band amplitude is mapped onto the real recovery target.
enum class AmplitudeModel {
  signed_magnitude, ///< +|a| when the phase lies in [0, pi), -|a| otherwise
  modulus,          ///< |a|
};

/// Law for the amplitudes of occupied bands: magnitude uniform on
/// [min_magnitude, max_magnitude] times `scale`, phase uniform on [0, 2pi).
struct AmplitudeLaw {
  double min_magnitude = 0.5;
  double max_magnitude = 1.5;
  double scale = 1.0;
  AmplitudeModel model = AmplitudeModel::signed_magnitude;

  friend bool operator==(const AmplitudeLaw&, const AmplitudeLaw&) = default;
};

/// One occupancy realization over a sensing window.
struct SpectrumInstance {
  BlockSpec spec;
  std::vector<std::uint8_t> states;                 // H_i
  std::vector<std::complex<double>> amplitudes;     // zero on vacant bands
  Vector x;                                         // real recovery target
  std::vector<std::size_t> support;                 // ascending

  std::size_t num_bands() const { return states.size(); }
  std::size_t sparsity() const { return support.size(); }
};

inline SpectrumInstance sample_occupancy(const BlockSpec& spec, Rng& rng,
                                         const AmplitudeLaw& law = {}) {
  if (!(law.min_magnitude > 0.0) || law.max_magnitude < law.min_magnitude ||
      !(law.scale > 0.0)) {
    throw std::invalid_argument("AmplitudeLaw: need 0 < min <= max and scale > 0");
  }
  const std::size_t n = spec.num_bands();
  SpectrumInstance inst;
  inst.spec = spec;
  inst.states.assign(n, 0);
  inst.amplitudes.assign(n, {0.0, 0.0});
  inst.x = Vector::Zero(static_cast<Eigen::Index>(n));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t g = 0; g < spec.num_blocks(); ++g) {
    const double p = spec.block(g).probability;
    for (std::size_t i = spec.block_begin(g); i < spec.block_end(g); ++i) {
      // Always consume the same number of draws per band so that the
      // occupancy pattern does not shift when the amplitude law changes.
      const double u_state = unit(rng);
      const double u_mag = unit(rng);
      const double u_phase = unit(rng);
      if (u_state >= p) continue;
      const double mag =
          law.scale * (law.min_magnitude + (law.max_magnitude - law.min_magnitude) * u_mag);
      const double phase = 2.0 * std::numbers::pi * u_phase;
      inst.states[i] = 1;
      inst.amplitudes[i] = std::polar(mag, phase);
      const double value = law.model == AmplitudeModel::modulus
                               ? mag
                               : (phase < std::numbers::pi ? mag : -mag);
      inst.x[static_cast<Eigen::Index>(i)] = value;
      inst.support.push_back(i);
    }
  }
  return inst;
}

/// Distribution of the number of occupied bands X = sum_i H_i.
struct OccupancyPmf {
  std::vector<double> probabilities; // entry k is Pr(X = k)

  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
      m += static_cast<double>(k) * probabilities[k];
    }
    return m;
  }

  /// Pr(X <= k).
  double cdf(std::size_t k) const {
    double s = 0.0;
    for (std::size_t j = 0; j <= k && j < probabilities.size(); ++j) s += probabilities[j];
    return std::min(s, 1.0);
  }

  /// Pr(X > k), summed directly from the upper tail.
  double tail_above(std::size_t k) const {
    double s = 0.0;
    for (std::size_t j = k + 1; j < probabilities.size(); ++j) s += probabilities[j];
    return s;
  }
};

/// Poisson-binomial PMF of independent Bernoulli(p_i) bands by iterative
/// convolution, O(n^2).
inline OccupancyPmf occupancy_pmf(std::span<const double> band_probabilities) {
  std::vector<double> pmf(band_probabilities.size() + 1, 0.0);
  pmf[0] = 1.0;
  std::size_t count = 0;
  for (double p : band_probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("occupancy_pmf: probability outside [0,1]");
    }
    ++count;
    for (std::size_t k = count; k > 0; --k) {
      pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    }
    pmf[0] *= (1.0 - p);
  }
  return OccupancyPmf{std::move(pmf)};
}

inline OccupancyPmf occupancy_pmf(const BlockSpec& spec) {
  const std::vector<double> p = spec.band_probabilities();
  return occupancy_pmf(std::span<const double>(p));
}

/// Chernoff lower bound on Pr(X <= k0). `informative` is false when
/// k0 <= E[X], where the bound carries no information and `value` is 0.
struct TailBound {
  double value = 0.0;
  bool informative = false;
};

inline TailBound chernoff_tail_bound(double k0, double mean_occupancy) {
  if (mean_occupancy < 0.0) {
    throw std::invalid_argument("chernoff_tail_bound: negative mean");
  }
  if (k0 <= mean_occupancy) return {0.0, false};
  if (mean_occupancy == 0.0) return {1.0, true};
  const double log_excess =
      (k0 - mean_occupancy) - k0 * std::log(k0 / mean_occupancy);
  const double value = 1.0 - std::exp(log_excess);
  return {std::clamp(value, 0.0, 1.0), true};
}

inline TailBound chernoff_tail_bound(double k0, const BlockSpec& spec) {
  return chernoff_tail_bound(k0, spec.expected_occupancy());
}

struct SparsityLevel {
  std::size_t k0 = 0;
  /// True when no k0 <= n reaches the requested confidence and n was returned.
  bool saturated = false;
};

/// Smallest integer k0 whose Chernoff bound on Pr(X <= k0) reaches 1 - alpha.
inline SparsityLevel select_sparsity_level(const BlockSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("select_sparsity_level: alpha must lie in (0,1)");
  }
  const std::size_t n = spec.num_bands();
  const double mean = spec.expected_occupancy();
  for (std::size_t k0 = 0; k0 <= n; ++k0) {
    if (chernoff_tail_bound(static_cast<double>(k0), mean).value >= 1.0 - alpha) {
      return {k0, false};
    }
  }
  return {n, true};
}

} // namespace hetsense
