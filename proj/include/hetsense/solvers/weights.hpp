#pragma once

#include "hetsense/core.hpp"
#include "hetsense/spectrum_model.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsense {

/// One positive weight per block, normalized to sum to one.
struct WeightVector {
  std::vector<double> omega;

  /// Per-band weights: each block weight replicated over its bands.
  Vector expand(const BlockSpec& spec) const {
    if (omega.size() != spec.num_blocks()) {
      throw std::invalid_argument("WeightVector: block count mismatch");
    }
    Vector w(static_cast<Eigen::Index>(spec.num_bands()));
    for (std::size_t g = 0; g < spec.num_blocks(); ++g) {
      for (std::size_t i = spec.block_begin(g); i < spec.block_end(g); ++i) {
        w[static_cast<Eigen::Index>(i)] = omega[g];
      }
    }
    return w;
  }
};

/// Weights inversely proportional to the average block sparsity n_i p_i.
inline WeightVector compute_weights(const BlockSpec& spec) {
  std::vector<double> inv(spec.num_blocks());
  double total = 0.0;
  for (std::size_t g = 0; g < spec.num_blocks(); ++g) {
    const double kbar = spec.average_sparsity(g);
    if (!(kbar > 0.0)) {
      throw std::invalid_argument(
          "compute_weights: block " + std::to_string(g) +
          " has zero average sparsity; merge it into a neighbour or exclude it");
    }
    inv[g] = 1.0 / kbar;
    total += inv[g];
  }
  for (double& w : inv) w /= total;
  return WeightVector{std::move(inv)};
}

/// Equal weights 1/g for every block.
inline WeightVector uniform_weights(const BlockSpec& spec) {
  const auto g = spec.num_blocks();
  return WeightVector{std::vector<double>(g, 1.0 / static_cast<double>(g))};
}

} // namespace hetsense
