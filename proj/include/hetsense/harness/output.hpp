#pragma once

#include "hetsense/harness/config.hpp"
#include "hetsense/harness/experiment.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hetsense::harness {

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string("nan");
}

inline nlohmann::json jnum(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json jnum(const std::optional<double>& v) {
  return v ? jnum(*v) : nlohmann::json(nullptr);
}

inline void write_header(std::ostream& os, std::string_view figure, const ExperimentConfig& cfg) {
  os << "# hetsense " << figure << "\n";
  os << "# config_hash " << config_hash(cfg) << "\n";
  os << "# seed " << cfg.seed << " trials " << cfg.trials << "\n";
}

template <typename Row>
void write_rows(std::ostream& os, OutputFormat format, const std::vector<std::string>& columns,
                const std::vector<Row>& rows) {
  if (format == OutputFormat::csv) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c].first;
      os << "\n";
    }
  } else {
    for (const auto& row : rows) {
      nlohmann::ordered_json j;
      for (std::size_t c = 0; c < row.size(); ++c) j[columns[c]] = row[c].second;
      os << j.dump() << "\n";
    }
  }
}

using Cell = std::pair<std::string, nlohmann::json>;

inline Cell cell(double v) { return {fmt(v), jnum(v)}; }
inline Cell cell(const std::optional<double>& v) { return {fmt(v), jnum(v)}; }
inline Cell cell(std::size_t v) { return {std::to_string(v), nlohmann::json(v)}; }
inline Cell cell(std::string_view v) { return {std::string(v), nlohmann::json(std::string(v))}; }
inline Cell cell(bool v) { return {v ? "1" : "0", nlohmann::json(v)}; }

} // namespace detail

/// Error and error-gain records, one row per (sweep point, solver). The epg
/// columns give the gain of weighted_l1 over the row's solver.
inline void write_sweep(std::ostream& os, std::string_view figure, const ExperimentConfig& cfg,
                        const std::vector<SweepRecord>& records) {
  using detail::cell;
  const std::vector<std::string> columns = {
      "sweep", "m", "snr_db", "solver", "trials", "skipped", "used", "nonconverged",
      "mean_error", "std_error", "ci95_error", "mean_iterations", "epg", "epg_ci95",
      "epg_defined", "epg_undefined"};
  std::vector<std::vector<detail::Cell>> rows;
  for (const auto& rec : records) {
    for (const auto& s : rec.solvers) {
      rows.push_back({cell(rec.point.index), cell(rec.point.m), cell(rec.point.snr_db),
                      cell(to_string(s.solver)), cell(rec.trials), cell(rec.skipped),
                      cell(s.used), cell(s.nonconverged), cell(s.mean_error),
                      cell(s.std_error), cell(s.ci95_error), cell(s.mean_iterations),
                      cell(s.epg), cell(s.epg_ci95), cell(s.epg_defined),
                      cell(s.epg_undefined)});
    }
  }
  if (cfg.format == OutputFormat::csv) detail::write_header(os, figure, cfg);
  detail::write_rows(os, cfg.format, columns, rows);
}

inline void write_roc(std::ostream& os, const ExperimentConfig& cfg,
                      const std::vector<RocRecord>& records) {
  using detail::cell;
  const std::vector<std::string> columns = {
      "sweep", "m", "snr_db", "pf_target", "solver", "pd", "pf", "detected", "occupied",
      "false_alarms", "vacant", "trials", "skipped", "nonconverged"};
  std::vector<std::vector<detail::Cell>> rows;
  for (const auto& r : records) {
    rows.push_back({cell(r.point.index), cell(r.point.m), cell(r.point.snr_db),
                    cell(r.pf_target), cell(to_string(r.solver)), cell(r.counts.pd()),
                    cell(r.counts.pf()), cell(r.counts.detected), cell(r.counts.occupied),
                    cell(r.counts.false_alarms), cell(r.counts.vacant), cell(r.trials),
                    cell(r.skipped), cell(r.nonconverged)});
  }
  if (cfg.format == OutputFormat::csv) detail::write_header(os, "roc", cfg);
  detail::write_rows(os, cfg.format, columns, rows);
}

inline void write_sparsity(std::ostream& os, const ExperimentConfig& cfg,
                           const std::vector<SparsityRecord>& records) {
  using detail::cell;
  const std::vector<std::string> columns = {"k0", "chernoff", "informative", "exact_cdf",
                                            "exact_tail"};
  std::vector<std::vector<detail::Cell>> rows;
  for (const auto& r : records) {
    rows.push_back({cell(r.k0), cell(r.chernoff), cell(r.informative), cell(r.exact_cdf),
                    cell(r.exact_tail)});
  }
  if (cfg.format == OutputFormat::csv) detail::write_header(os, "sparsity", cfg);
  detail::write_rows(os, cfg.format, columns, rows);
}

} // namespace hetsense::harness
