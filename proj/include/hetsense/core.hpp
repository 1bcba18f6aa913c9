#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hetsense {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Random engine used by every sampling routine. All randomness enters the
/// library through an explicit reference to one of these.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a root seed with a path of indices (sweep, trial, stream, ...) into
/// an independent 64-bit seed. Order of the path matters.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t index : path) {
    h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  }
  return h;
}

inline Rng make_rng(std::uint64_t root,
                    std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(root, path));
}

} // namespace hetsense
