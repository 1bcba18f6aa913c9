#pragma once

#include "hetsense/core.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace hetsense {

enum class SolverId { weighted_l1, lasso, omp, cosamp };

inline constexpr std::array<SolverId, 4> kAllSolvers = {
    SolverId::weighted_l1, SolverId::lasso, SolverId::omp, SolverId::cosamp};

inline constexpr std::string_view to_string(SolverId id) {
  switch (id) {
  case SolverId::weighted_l1: return "weighted_l1";
  case SolverId::lasso: return "lasso";
  case SolverId::omp: return "omp";
  case SolverId::cosamp: return "cosamp";
  }
  return "unknown";
}

inline std::optional<SolverId> parse_solver_id(std::string_view name) {
  for (SolverId id : kAllSolvers) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

struct RecoveryResult {
  Vector x_hat;
  double residual_norm = 0.0; ///< ||A x_hat - y||_2
  double objective = 0.0;     ///< weighted l1 norm for convex solvers, ||x_hat||_1 otherwise
  std::size_t iterations = 0;
  bool converged = false;
  SolverId solver = SolverId::weighted_l1;
};

} // namespace hetsense
