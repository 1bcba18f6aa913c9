#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "hetsense/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using hetsense::Matrix;
using hetsense::Vector;

struct LpOptimum {
  double objective = std::numeric_limits<double>::infinity();
  Vector x;
  std::size_t vertices = 0; ///< nonsingular bases visited
};

/// min sum_i w_i |x_i| s.t. A x = y, by visiting every basic solution.
/// An optimum of a linear program is attained at a vertex of the feasible
/// set, and every vertex is the solution on some m-column basis.
inline LpOptimum basis_pursuit_by_enumeration(const Matrix& A, const Vector& y, const Vector& w) {
  const auto m = A.rows();
  const auto n = A.cols();
  LpOptimum best;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  Matrix B(m, m);
  for (;;) {
    for (Eigen::Index j = 0; j < m; ++j) B.col(j) = A.col(idx[static_cast<std::size_t>(j)]);
    Eigen::PartialPivLU<Matrix> lu(B);
    // Bernoulli bases are singular exactly; the pivot ratio screens them out.
    const auto& d = lu.matrixLU().diagonal();
    const double ratio = d.cwiseAbs().minCoeff() / d.cwiseAbs().maxCoeff();
    if (ratio > 1e-10) {
      const Vector z = lu.solve(y);
      if ((B * z - y).norm() <= 1e-9 * (1.0 + y.norm())) {
        ++best.vertices;
        double obj = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
          obj += w[idx[static_cast<std::size_t>(j)]] * std::abs(z[j]);
        }
        if (obj < best.objective) {
          best.objective = obj;
          best.x = Vector::Zero(n);
          for (Eigen::Index j = 0; j < m; ++j) best.x[idx[static_cast<std::size_t>(j)]] = z[j];
        }
      }
    }
    // Next m-combination in lexicographic order.
    Eigen::Index k = m - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == n - m + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (Eigen::Index j = k + 1; j < m; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return best;
}

/// Residual of the optimality conditions of
///   min sum w_i |x_i|  s.t. ||A x - y|| <= eps
/// at a candidate x with an active constraint: the multiplier direction is
/// fixed to the residual r = y - A x, its scale c >= 0 is fitted on the
/// support, and the return value is the worst violation of
///   A_S^T (c r) = w_S sign(x_S),  |A_j^T (c r)| <= w_j off the support,
/// relative to the weights. Also reports the constraint slack.
struct KktReport {
  double stationarity = 0.0; ///< max relative violation on the support
  double dual_feasibility = 0.0; ///< max excess of |A_j^T nu| / w_j over 1
  double constraint_gap = 0.0;   ///< | ||r|| - eps |
};

inline KktReport kkt_check(const Matrix& A, const Vector& y, double eps, const Vector& w,
                           const Vector& x, double support_tol = 1e-8) {
  KktReport rep;
  const Vector r = y - A * x;
  rep.constraint_gap = std::abs(r.norm() - eps);
  const Vector g = A.transpose() * r;
  std::vector<Eigen::Index> S;
  const double scale = x.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > support_tol * std::max(1.0, scale)) S.push_back(i);
  }
  double c = 0.0;
  if (!S.empty()) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i : S) {
      const double target = w[i] * (x[i] > 0 ? 1.0 : -1.0);
      num += g[i] * target;
      den += g[i] * g[i];
    }
    c = den > 0.0 ? num / den : 0.0;
  }
  std::vector<bool> on(static_cast<std::size_t>(x.size()), false);
  for (Eigen::Index i : S) {
    on[static_cast<std::size_t>(i)] = true;
    const double target = w[i] * (x[i] > 0 ? 1.0 : -1.0);
    rep.stationarity = std::max(rep.stationarity, std::abs(c * g[i] - target) / w[i]);
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (on[static_cast<std::size_t>(j)]) continue;
    rep.dual_feasibility = std::max(rep.dual_feasibility, std::abs(c * g[j]) / w[j] - 1.0);
  }
  if (c < 0.0) rep.stationarity = std::numeric_limits<double>::infinity();
  return rep;
}

} // namespace oracle
