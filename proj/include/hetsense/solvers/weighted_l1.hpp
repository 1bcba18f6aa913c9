#pragma once

#include "hetsense/core.hpp"
#include "hetsense/solvers/result.hpp"
#include "hetsense/solvers/weights.hpp"
#include "hetsense/spectrum_model.hpp"

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hetsense {

struct AdmmOptions {
  double tol_feas = 1e-6;  ///< absolute slack allowed on ||A x - y|| <= eps
  double tol_opt = 1e-6;   ///< primal and dual residuals must drop below tol_opt * sqrt(n)
  std::size_t max_iterations = 10000;
  double rho = 3.0;        ///< penalty, in units where ||y|| = 1 and mean(w) = 1
  bool adaptive_rho = false; ///< residual balancing
  double balance_ratio = 10.0;
  double rho_scale = 2.0;
  /// Attempt an active-set optimality certificate every `polish_every`
  /// iterations (0 disables polishing).
  std::size_t polish_every = 10;
};

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Exact minimizer on a fixed support and sign pattern, accepted only when
/// it satisfies the KKT conditions of the constrained program.
///
/// On support S with signs s the minimizer of 0.5||Ax - y||^2 + t w^T|x| is
/// x_S(t) = x_ls - t G^{-1}(w_S s), G = A_S^T A_S, and its residual obeys
/// ||r(t)||^2 = ||r_ls||^2 + t^2 ||A_S G^{-1} w_S s||^2, so the t that puts
/// the residual exactly on the eps-sphere is available in closed form. When
/// eps does not exceed the least-squares residual (basis pursuit), x_ls itself
/// is the candidate and the multiplier comes from the ADMM dual estimate.
struct PolishOutcome {
  bool certified = false;
  Vector x;
};

inline PolishOutcome polish_on_support(const Matrix& A, const Vector& y, double eps,
                                       const Vector& w,
                                       const std::vector<Eigen::Index>& support,
                                       const std::vector<double>& signs,
                                       const Vector& dual_estimate) {
  PolishOutcome out;
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0 || k > A.rows()) return out;

  Matrix As(A.rows(), k);
  Vector ws(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    As.col(j) = A.col(support[static_cast<std::size_t>(j)]);
    ws[j] = w[support[static_cast<std::size_t>(j)]] * signs[static_cast<std::size_t>(j)];
  }
  const Matrix G = As.transpose() * As;
  const Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
    return out;
  }
  const Vector x_ls = ldlt.solve(As.transpose() * y);
  const Vector r_ls = y - As * x_ls;
  const double r_ls_norm = r_ls.norm();
  constexpr double kSlack = 1e-12;
  if (r_ls_norm > eps + kSlack) return out;

  const Vector dx = ldlt.solve(ws);
  Vector xs;
  Vector nu;
  const double d_norm = (As * dx).norm();
  if (eps > r_ls_norm + kSlack && d_norm > 0.0) {
    const double t = std::sqrt(eps * eps - r_ls_norm * r_ls_norm) / d_norm;
    xs = x_ls - t * dx;
    nu = (y - As * xs) / t;
  } else {
    xs = x_ls;
    // Closest multiplier to the ADMM estimate that is exact on the support.
    nu = dual_estimate + As * ldlt.solve(ws - As.transpose() * dual_estimate);
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(xs[j] * ws[j] > 0.0)) return out; // sign pattern changed
  }
  const Vector corr = A.transpose() * nu;
  constexpr double kDualTol = 1e-7;
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    if (std::abs(corr[i]) > w[i] * (1.0 + kDualTol)) return out;
  }
  out.x = Vector::Zero(A.cols());
  for (Eigen::Index j = 0; j < k; ++j) out.x[support[static_cast<std::size_t>(j)]] = xs[j];
  out.certified = true;
  return out;
}

/// Candidate supports, in order: the support of the current iterate, the
/// bands whose dual correlation |a_i^T nu| / w_i is within `kNearActive` of
/// one, and the m bands with the largest such ratio (a full basis, which is
/// where a failed basis-pursuit recovery usually ends up).
inline PolishOutcome polish(const Matrix& A, const Vector& y, double eps, const Vector& w,
                            const Vector& x, const Vector& dual_estimate) {
  std::vector<Eigen::Index> support;
  std::vector<double> signs;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      support.push_back(i);
      signs.push_back(x[i] > 0.0 ? 1.0 : -1.0);
    }
  }
  PolishOutcome out = polish_on_support(A, y, eps, w, support, signs, dual_estimate);
  if (out.certified) return out;

  const Vector corr = A.transpose() * dual_estimate;
  const Vector ratio = corr.cwiseAbs().cwiseQuotient(w);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ratio.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ratio[a] > ratio[b]; });

  auto try_prefix = [&](std::size_t count) {
    std::vector<Eigen::Index> cand(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(cand.begin(), cand.end());
    if (cand == support) return PolishOutcome{};
    std::vector<double> cand_signs;
    for (Eigen::Index i : cand) cand_signs.push_back(corr[i] > 0.0 ? 1.0 : -1.0);
    return polish_on_support(A, y, eps, w, cand, cand_signs, dual_estimate);
  };

  constexpr double kNearActive = 1e-4;
  std::size_t near = 0;
  while (near < order.size() && ratio[order[near]] >= 1.0 - kNearActive) ++near;
  const auto m = static_cast<std::size_t>(A.rows());
  if (near > 0 && near <= m) {
    out = try_prefix(near);
    if (out.certified) return out;
  }
  if (near != m && m <= order.size()) out = try_prefix(m);
  return out;
}

} // namespace detail

/// Solves
///
///     minimize  sum_i w_i |x_i|   subject to  ||A x - y||_2 <= eps
///
/// with ADMM on the splitting x = z, u = A z, where x carries the weighted
/// l1 term and u is confined to the eps-ball around y. The z-step solves
/// (I + A^T A) z = r through the m-by-m system (I + A A^T).
///
/// The problem is rescaled internally so that ||y|| = 1 and the weights have
/// unit mean; both rescalings leave the minimizer unchanged (up to the
/// matching scale of x), which makes the iteration itself invariant to how
/// the caller normalizes weights or signal level.
///
/// Every `polish_every` iterations the current support is handed to
/// detail::polish_on_support; a certified point ends the iteration with the
/// exact minimizer. Otherwise the run stops on the usual primal/dual residual
/// test combined with feasibility of the returned x.
inline RecoveryResult solve_weighted_l1(const Matrix& A, const Vector& y, double epsilon,
                                        const Vector& band_weights,
                                        const AdmmOptions& opts = {}) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (y.size() != m) throw std::invalid_argument("solve_weighted_l1: y length != rows(A)");
  if (band_weights.size() != n) {
    throw std::invalid_argument("solve_weighted_l1: weight length != cols(A)");
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("solve_weighted_l1: epsilon must be >= 0");
  if (!(band_weights.minCoeff() > 0.0)) {
    throw std::invalid_argument("solve_weighted_l1: weights must be positive");
  }

  RecoveryResult result;
  result.solver = SolverId::weighted_l1;

  const double y_norm = y.norm();
  if (y_norm <= epsilon) {
    // Zero is feasible and has zero objective.
    result.x_hat = Vector::Zero(n);
    result.residual_norm = y_norm;
    result.converged = true;
    return result;
  }

  const double scale = y_norm;
  const Vector yn = y / scale;
  const double eps = epsilon / scale;
  const Vector w = band_weights / band_weights.mean();

  Matrix gram = Matrix::Identity(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(A);
  const Eigen::LLT<Matrix> chol(gram);
  if (chol.info() != Eigen::Success) {
    throw std::runtime_error("solve_weighted_l1: factorization of I + A A^T failed");
  }

  Vector x = Vector::Zero(n), z = Vector::Zero(n), dual_x = Vector::Zero(n);
  Vector u = Vector::Zero(m), Az = Vector::Zero(m), dual_u = Vector::Zero(m);
  Vector x_prev(n), u_prev(m), rhs(n), v(m);

  double rho = opts.rho;
  const double stop = opts.tol_opt * std::sqrt(static_cast<double>(n));
  const double feas_limit = epsilon + opts.tol_feas;

  auto residual_of = [&](const Vector& candidate) { return (A * candidate - y).norm(); };

  Vector polished;
  std::size_t it = 0;
  for (; it < opts.max_iterations; ++it) {
    // z-step: (I + A^T A) z = rhs, via Woodbury.
    rhs.noalias() = x + dual_x;
    v = u + dual_u;
    rhs.noalias() += A.transpose() * v;
    v.noalias() = A * rhs;
    v = chol.solve(v);
    z = rhs;
    z.noalias() -= A.transpose() * v;
    Az.noalias() = A * z;

    // (x, u)-step: weighted soft threshold and projection onto the eps-ball.
    x_prev = x;
    u_prev = u;
    const Vector xv = z - dual_x;
    for (Eigen::Index i = 0; i < n; ++i) x[i] = detail::soft_threshold(xv[i], w[i] / rho);
    v = Az - dual_u - yn;
    const double vn = v.norm();
    u = (vn > eps) ? Vector(yn + v * (eps / vn)) : Vector(Az - dual_u);

    dual_x += x - z;
    dual_u += u - Az;

    const double r_pri = std::sqrt((x - z).squaredNorm() + (u - Az).squaredNorm());
    const Vector dx = x - x_prev;
    const Vector du = u - u_prev;
    const double r_dual = rho * (dx + A.transpose() * du).norm();

    if (opts.polish_every > 0 && (it + 1) % opts.polish_every == 0) {
      auto p = detail::polish(A, yn, eps, w, x, rho * dual_u);
      if (p.certified && residual_of(p.x * scale) <= feas_limit) {
        polished = std::move(p.x);
        ++it;
        result.converged = true;
        break;
      }
    }

    if (r_pri <= stop && r_dual <= stop) {
      if (residual_of(x * scale) <= feas_limit) {
        ++it;
        result.converged = true;
        break;
      }
    }

    if (opts.adaptive_rho) {
      if (r_pri > opts.balance_ratio * r_dual) {
        rho *= opts.rho_scale;
        dual_x /= opts.rho_scale;
        dual_u /= opts.rho_scale;
      } else if (r_dual > opts.balance_ratio * r_pri) {
        rho /= opts.rho_scale;
        dual_x *= opts.rho_scale;
        dual_u *= opts.rho_scale;
      }
    }
  }

  result.x_hat = (polished.size() > 0 ? polished : x) * scale;
  result.iterations = it;
  result.residual_norm = residual_of(result.x_hat);
  result.objective = band_weights.cwiseProduct(result.x_hat.cwiseAbs()).sum();
  if (result.converged && result.residual_norm > feas_limit) result.converged = false;
  return result;
}

inline RecoveryResult solve_weighted_l1(const Matrix& A, const Vector& y, double epsilon,
                                        const WeightVector& weights, const BlockSpec& spec,
                                        const AdmmOptions& opts = {}) {
  return solve_weighted_l1(A, y, epsilon, weights.expand(spec), opts);
}

/// Plain l1 recovery (basis pursuit denoising): the weighted program with all
/// band weights equal.
inline RecoveryResult solve_l1(const Matrix& A, const Vector& y, double epsilon,
                               const AdmmOptions& opts = {}) {
  RecoveryResult r = solve_weighted_l1(A, y, epsilon, Vector::Ones(A.cols()), opts);
  r.solver = SolverId::lasso;
  return r;
}

} // namespace hetsense
