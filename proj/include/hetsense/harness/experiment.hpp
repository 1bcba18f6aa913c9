#pragma once

#include "hetsense/core.hpp"
#include "hetsense/detection.hpp"
#include "hetsense/harness/config.hpp"
#include "hetsense/sensing.hpp"
#include "hetsense/solvers.hpp"
#include "hetsense/spectrum_model.hpp"
#include "hetsense/stats.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

namespace hetsense::harness {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index
/// writes only its own slot, so results never depend on scheduling. The
/// first exception thrown is rethrown after all workers stop.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct RunOptions {
  std::size_t workers = 1;
  std::ostream* progress = nullptr; ///< wall-time log; never part of the data
};

/// One sweep coordinate of the (m, snr) grid, enumerated m-major.
struct GridPoint {
  std::size_t index = 0;
  std::size_t m = 0;
  double snr_db = 0.0;
};

inline std::vector<GridPoint> sweep_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> grid;
  for (std::size_t m : cfg.measurements) {
    for (double snr : cfg.snr_db) grid.push_back({grid.size(), m, snr});
  }
  return grid;
}

struct TrialData {
  SpectrumInstance instance;
  SensingSystem system;
  MeasurementSet measurements;
};

enum Stream : std::uint64_t { kOccupancyStream = 0, kMatrixStream = 1, kNoiseStream = 2 };

/// Draws the (x0, A, eta) triple for one trial. Returns nothing when the
/// drawn spectrum is empty, since an SNR target is undefined there. An
/// infinite SNR means noise-free measurements with eps = 0.
inline std::optional<TrialData> draw_trial(const ExperimentConfig& cfg, const GridPoint& point,
                                           std::size_t trial) {
  Rng occ = make_rng(cfg.seed, {point.index, trial, kOccupancyStream});
  Rng mat = make_rng(cfg.seed, {point.index, trial, kMatrixStream});
  Rng noise = make_rng(cfg.seed, {point.index, trial, kNoiseStream});

  TrialData t;
  t.instance = sample_occupancy(cfg.spec, occ, cfg.amplitude);
  if (t.instance.sparsity() == 0) return std::nullopt;
  t.system = generate_sensing_matrix(point.m, cfg.spec.num_bands(), mat);
  const NoiseTarget target = std::isfinite(point.snr_db)
                                 ? NoiseTarget::snr(point.snr_db, cfg.snr_mode)
                                 : NoiseTarget::sigma(0.0);
  t.measurements = acquire_measurements(t.system, t.instance, target, noise,
                                        EpsilonRule{cfg.epsilon_sd});
  return t;
}

/// Greedy parameters derived from the design sparsity level k0.
inline OmpOptions omp_options(std::size_t k0, std::size_t m, double eps) {
  return {std::min(k0, m), eps};
}

inline CosampOptions cosamp_options(std::size_t k0, std::size_t m, double eps,
                                    std::size_t max_iterations) {
  return {std::max<std::size_t>(1, std::min(k0, m / 3)), eps, max_iterations};
}

/// Solves one trial with every configured solver, in config order.
inline std::vector<RecoveryResult> solve_trial(const ExperimentConfig& cfg, const TrialData& t,
                                               std::size_t k0) {
  const Matrix& A = t.system.A;
  const Vector& y = t.measurements.y;
  const double eps = t.measurements.epsilon;
  const std::size_t m = static_cast<std::size_t>(A.rows());
  std::vector<RecoveryResult> out;
  out.reserve(cfg.solvers.size());
  for (SolverId id : cfg.solvers) {
    switch (id) {
    case SolverId::weighted_l1:
      out.push_back(solve_weighted_l1(A, y, eps, compute_weights(cfg.spec), cfg.spec,
                                      cfg.solver_options.admm));
      break;
    case SolverId::lasso:
      out.push_back(solve_l1(A, y, eps, cfg.solver_options.admm));
      break;
    case SolverId::omp:
      out.push_back(omp(A, y, omp_options(k0, m, eps)));
      break;
    case SolverId::cosamp:
      out.push_back(cosamp(A, y, cosamp_options(k0, m, eps,
                                                cfg.solver_options.greedy_max_iterations)));
      break;
    }
  }
  return out;
}

/// Per-trial error gain of the proposed solver over a baseline, in percent.
/// Undefined when the baseline error is zero.
inline std::optional<double> epg_percent(double baseline_error, double proposed_error) {
  if (!(baseline_error > 0.0)) return std::nullopt;
  return (baseline_error - proposed_error) / baseline_error * 100.0;
}

struct TrialOutcome {
  bool skipped = false;
  std::vector<double> errors; ///< ||x_hat - x0||_2 per solver
  std::vector<std::uint8_t> converged;
  std::vector<std::size_t> iterations;
};

struct SolverSummary {
  SolverId solver = SolverId::weighted_l1;
  std::size_t used = 0; ///< trials entering the mean
  std::size_t nonconverged = 0;
  double mean_error = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double ci95_error = std::numeric_limits<double>::quiet_NaN();
  double mean_iterations = std::numeric_limits<double>::quiet_NaN();
  /// EPG of weighted_l1 over this solver; NaN when weighted_l1 is not run.
  double epg = std::numeric_limits<double>::quiet_NaN();
  double epg_ci95 = std::numeric_limits<double>::quiet_NaN();
  std::size_t epg_defined = 0;
  std::size_t epg_undefined = 0;
};

struct SweepRecord {
  GridPoint point;
  std::size_t trials = 0;
  std::size_t skipped = 0;
  std::vector<SolverSummary> solvers;
  std::vector<TrialOutcome> outcomes; ///< raw per-trial data, ordered by trial
};

namespace detail {

inline std::optional<std::size_t> solver_slot(const ExperimentConfig& cfg, SolverId id) {
  for (std::size_t s = 0; s < cfg.solvers.size(); ++s) {
    if (cfg.solvers[s] == id) return s;
  }
  return std::nullopt;
}

inline SweepRecord summarize(const ExperimentConfig& cfg, const GridPoint& point,
                             std::vector<TrialOutcome> outcomes) {
  SweepRecord rec;
  rec.point = point;
  rec.trials = outcomes.size();
  for (const auto& o : outcomes) rec.skipped += o.skipped ? 1 : 0;
  const auto proposed = solver_slot(cfg, SolverId::weighted_l1);

  for (std::size_t s = 0; s < cfg.solvers.size(); ++s) {
    SolverSummary sum;
    sum.solver = cfg.solvers[s];
    std::vector<double> errors;
    std::vector<double> gains;
    double iterations = 0.0;
    for (const auto& o : outcomes) {
      if (o.skipped) continue;
      const bool ok = o.converged[s] != 0;
      if (!ok) ++sum.nonconverged;
      if (ok || !cfg.exclude_nonconverged) {
        errors.push_back(o.errors[s]);
        iterations += static_cast<double>(o.iterations[s]);
      }
      if (proposed) {
        const bool pair_ok = ok && o.converged[*proposed] != 0;
        if (!pair_ok && cfg.exclude_nonconverged) continue;
        if (auto g = epg_percent(o.errors[s], o.errors[*proposed])) {
          gains.push_back(*g);
        } else {
          ++sum.epg_undefined;
        }
      }
    }
    sum.used = errors.size();
    if (!errors.empty()) {
      sum.mean_error = stats::mean(errors);
      sum.mean_iterations = iterations / static_cast<double>(errors.size());
    }
    sum.std_error = stats::stddev(errors);
    sum.ci95_error = stats::ci_halfwidth(errors);
    sum.epg_defined = gains.size();
    if (!gains.empty()) sum.epg = stats::mean(gains);
    sum.epg_ci95 = stats::ci_halfwidth(gains);
    rec.solvers.push_back(sum);
  }
  rec.outcomes = std::move(outcomes);
  return rec;
}

inline void log_point(const RunOptions& run, const char* what, const GridPoint& p,
                      std::chrono::steady_clock::time_point start) {
  if (!run.progress) return;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  *run.progress << what << " point " << p.index << " (m=" << p.m << ", snr=" << p.snr_db
                << " dB): " << secs << " s\n";
}

} // namespace detail

/// Monte-Carlo error sweep over the (m, snr) grid. Every solver sees the same
/// (x0, A, eta) in each trial.
inline std::vector<SweepRecord> run_mse_sweep(const ExperimentConfig& cfg,
                                              const RunOptions& run = {}) {
  const std::size_t k0 = cfg.effective_sparsity_level();
  std::vector<SweepRecord> records;
  for (const GridPoint& point : sweep_grid(cfg)) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<TrialOutcome> outcomes(cfg.trials);
    parallel_for(cfg.trials, run.workers, [&](std::size_t trial) {
      TrialOutcome& o = outcomes[trial];
      const auto data = draw_trial(cfg, point, trial);
      if (!data) {
        o.skipped = true;
        return;
      }
      for (const RecoveryResult& r : solve_trial(cfg, *data, k0)) {
        o.errors.push_back((r.x_hat - data->instance.x).norm());
        o.converged.push_back(r.converged ? 1 : 0);
        o.iterations.push_back(r.iterations);
      }
    });
    records.push_back(detail::summarize(cfg, point, std::move(outcomes)));
    detail::log_point(run, "mse", point, start);
  }
  return records;
}

/// Error-gain sweep: the error sweep with the proposed solver required.
inline std::vector<SweepRecord> run_epg_sweep(const ExperimentConfig& cfg,
                                              const RunOptions& run = {}) {
  if (!cfg.has_solver(SolverId::weighted_l1)) {
    throw ConfigError(0, "the epg sweep needs weighted_l1 among the solvers");
  }
  return run_mse_sweep(cfg, run);
}

struct RocRecord {
  GridPoint point;
  double pf_target = 0.0;
  SolverId solver = SolverId::weighted_l1;
  DetectionCounts counts;
  std::size_t trials = 0;
  std::size_t skipped = 0;
  std::size_t nonconverged = 0;
};

/// Detection performance over the pf grid. Each trial is solved once and the
/// estimate is thresholded at every pf target; pd and pf pool band counts
/// over all trials.
inline std::vector<RocRecord> run_roc(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  if (cfg.pf_grid.empty()) throw ConfigError(0, "roc needs a nonempty pf_grid");
  const std::size_t k0 = cfg.effective_sparsity_level();
  const std::size_t S = cfg.solvers.size();
  const std::size_t P = cfg.pf_grid.size();
  std::vector<RocRecord> records;

  struct Slot {
    bool skipped = false;
    std::vector<DetectionCounts> counts; // [solver * P + pf]
    std::vector<std::uint8_t> converged;
  };

  for (const GridPoint& point : sweep_grid(cfg)) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<Slot> slots(cfg.trials);
    parallel_for(cfg.trials, run.workers, [&](std::size_t trial) {
      Slot& slot = slots[trial];
      const auto data = draw_trial(cfg, point, trial);
      if (!data) {
        slot.skipped = true;
        return;
      }
      const auto results = solve_trial(cfg, *data, k0);
      slot.counts.resize(S * P);
      for (std::size_t s = 0; s < S; ++s) {
        slot.converged.push_back(results[s].converged ? 1 : 0);
        for (std::size_t q = 0; q < P; ++q) {
          const double lambda = detection_threshold(data->measurements.noise_energy_mean(),
                                                    point.m, cfg.pf_grid[q]);
          slot.counts[s * P + q] =
              decide_and_score(results[s].x_hat, data->instance, lambda).counts;
        }
      }
    });

    for (std::size_t q = 0; q < P; ++q) {
      for (std::size_t s = 0; s < S; ++s) {
        RocRecord rec;
        rec.point = point;
        rec.pf_target = cfg.pf_grid[q];
        rec.solver = cfg.solvers[s];
        rec.trials = cfg.trials;
        for (const Slot& slot : slots) {
          if (slot.skipped) {
            ++rec.skipped;
            continue;
          }
          const bool ok = slot.converged[s] != 0;
          if (!ok) ++rec.nonconverged;
          if (!ok && cfg.exclude_nonconverged) continue;
          rec.counts += slot.counts[s * P + q];
        }
        records.push_back(rec);
      }
    }
    detail::log_point(run, "roc", point, start);
  }
  return records;
}

struct SparsityRecord {
  std::size_t k0 = 0;
  double chernoff = 0.0;
  bool informative = false;
  double exact_cdf = 0.0;  ///< Pr(X <= k0)
  double exact_tail = 0.0; ///< Pr(X > k0)
};

/// Chernoff occupancy bound over the configured k0 range with the exact
/// Poisson-binomial values alongside.
inline std::vector<SparsityRecord> run_sparsity_figure(const ExperimentConfig& cfg) {
  const OccupancyPmf pmf = occupancy_pmf(cfg.spec);
  const double mean = cfg.spec.expected_occupancy();
  std::vector<SparsityRecord> out;
  for (std::size_t k0 = cfg.k0_min; k0 <= cfg.k0_max; ++k0) {
    const TailBound b = chernoff_tail_bound(static_cast<double>(k0), mean);
    out.push_back({k0, b.value, b.informative, pmf.cdf(k0), pmf.tail_above(k0)});
  }
  return out;
}

} // namespace hetsense::harness
