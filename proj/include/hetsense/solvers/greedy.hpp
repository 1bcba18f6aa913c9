#pragma once

#include "hetsense/core.hpp"
#include "hetsense/solvers/result.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsense {

namespace detail {

inline Matrix gather_columns(const Matrix& A, const std::vector<Eigen::Index>& cols) {
  Matrix sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    sub.col(static_cast<Eigen::Index>(j)) = A.col(cols[j]);
  }
  return sub;
}

/// Least-squares coefficients of y on the given columns. A rank-deficient
/// submatrix throws unless `basic` is set, in which case the basic solution
/// (zero on dependent columns) is returned.
inline Vector restricted_least_squares(const Matrix& A, const std::vector<Eigen::Index>& cols,
                                       const Vector& y, const char* who, bool basic = false) {
  const Matrix sub = gather_columns(A, cols);
  Eigen::ColPivHouseholderQR<Matrix> qr(sub);
  qr.setThreshold(1e-10);
  if (!basic && qr.rank() < static_cast<Eigen::Index>(cols.size())) {
    throw std::runtime_error(std::string(who) + ": selected submatrix of " +
                             std::to_string(cols.size()) + " columns is rank deficient");
  }
  return qr.solve(y);
}

/// Indices of the `count` largest |values|; ties go to the lower index.
inline std::vector<Eigen::Index> top_magnitudes(const Vector& values, std::size_t count) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count),
                    order.end(), [&](Eigen::Index a, Eigen::Index b) {
                      const double va = std::abs(values[a]);
                      const double vb = std::abs(values[b]);
                      return va > vb || (va == vb && a < b);
                    });
  order.resize(count);
  return order;
}

} // namespace detail

struct OmpOptions {
  std::size_t max_atoms = 0;   ///< k_max, must not exceed rows(A)
  double residual_tol = 0.0;   ///< stop once ||y - A x|| <= residual_tol
};

/// Orthogonal matching pursuit.
inline RecoveryResult omp(const Matrix& A, const Vector& y, const OmpOptions& opts) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (y.size() != m) throw std::invalid_argument("omp: y length != rows(A)");
  if (opts.max_atoms > static_cast<std::size_t>(m)) {
    throw std::invalid_argument("omp: max_atoms exceeds the number of measurements");
  }

  RecoveryResult result;
  result.solver = SolverId::omp;
  result.x_hat = Vector::Zero(n);

  std::vector<Eigen::Index> support;
  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  Vector residual = y;
  Vector coeffs;

  while (support.size() < opts.max_atoms && residual.norm() > opts.residual_tol) {
    const Vector corr = A.transpose() * residual;
    Eigen::Index best = -1;
    double best_value = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      const double c = std::abs(corr[j]);
      if (c > best_value) {
        best_value = c;
        best = j;
      }
    }
    if (best < 0) break; // residual orthogonal to every remaining column
    support.push_back(best);
    selected[static_cast<std::size_t>(best)] = true;
    coeffs = detail::restricted_least_squares(A, support, y, "omp");
    residual = y - detail::gather_columns(A, support) * coeffs;
  }

  for (std::size_t j = 0; j < support.size(); ++j) {
    result.x_hat[support[j]] = coeffs[static_cast<Eigen::Index>(j)];
  }
  result.iterations = support.size();
  result.residual_norm = (A * result.x_hat - y).norm();
  result.objective = result.x_hat.lpNorm<1>();
  result.converged = result.residual_norm <= opts.residual_tol + 1e-12;
  return result;
}

struct CosampOptions {
  std::size_t sparsity = 1;     ///< k
  double residual_tol = 0.0;
  std::size_t max_iterations = 100;
};

/// Compressive sampling matching pursuit. The returned estimate has at most
/// `sparsity` nonzeros.
inline RecoveryResult cosamp(const Matrix& A, const Vector& y, const CosampOptions& opts) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (y.size() != m) throw std::invalid_argument("cosamp: y length != rows(A)");
  if (opts.sparsity < 1 || opts.sparsity > static_cast<std::size_t>(n)) {
    throw std::invalid_argument("cosamp: sparsity must lie in [1, n]");
  }
  const std::size_t k = opts.sparsity;

  RecoveryResult result;
  result.solver = SolverId::cosamp;
  result.x_hat = Vector::Zero(n);

  Vector x = Vector::Zero(n);
  Vector residual = y;
  double residual_norm = residual.norm();
  double best_norm = residual_norm;

  std::size_t it = 0;
  while (it < opts.max_iterations && residual_norm > opts.residual_tol) {
    ++it;
    const Vector proxy = A.transpose() * residual;
    std::vector<Eigen::Index> merged = detail::top_magnitudes(proxy, 2 * k);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (x[j] != 0.0) merged.push_back(j);
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    // Bernoulli columns can coincide up to sign, so the merged set may be
    // dependent.
    const Vector b = detail::restricted_least_squares(A, merged, y, "cosamp", true);
    Vector full = Vector::Zero(n);
    for (std::size_t j = 0; j < merged.size(); ++j) {
      full[merged[j]] = b[static_cast<Eigen::Index>(j)];
    }
    Vector pruned = Vector::Zero(n);
    for (Eigen::Index j : detail::top_magnitudes(full, k)) pruned[j] = full[j];

    residual = y - A * pruned;
    residual_norm = residual.norm();
    if (residual_norm >= best_norm * (1.0 - 1e-12)) {
      // Stagnation: keep the best iterate seen so far.
      if (residual_norm < best_norm) x = pruned;
      break;
    }
    best_norm = residual_norm;
    x = pruned;
  }

  result.x_hat = x;
  result.iterations = it;
  result.residual_norm = (A * x - y).norm();
  result.objective = x.lpNorm<1>();
  result.converged = result.residual_norm <= opts.residual_tol + 1e-12;
  return result;
}

} // namespace hetsense
