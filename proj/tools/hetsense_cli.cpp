#include "hetsense/bounds.hpp"
#include "hetsense/harness/config.hpp"
#include "hetsense/harness/experiment.hpp"
#include "hetsense/harness/output.hpp"
#include "hetsense/sensing.hpp"
#include "hetsense/solvers/weights.hpp"
#include "hetsense/spectrum_model.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

using namespace hetsense;
using nlohmann::ordered_json;

namespace {

constexpr double kReportedMeasurementCount = 29.0;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const char* kind, const std::string& message, int code) {
  ordered_json err;
  err["error"] = {{"type", kind}, {"message", message}};
  std::cerr << err.dump() << "\n";
  std::exit(code);
}

// "64:0.1,64:0.01" -> blocks
BlockSpec parse_blocks_arg(const std::string& text) {
  std::vector<Block> blocks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("block '" + item + "' is not size:probability");
    try {
      blocks.push_back({static_cast<std::size_t>(std::stoull(item.substr(0, colon))),
                        std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse block '" + item + "'");
    }
  }
  return BlockSpec(std::move(blocks));
}

struct SpecSource {
  std::string config;
  std::string blocks;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "experiment config (YAML)");
    cmd->add_option("--blocks", blocks, "block layout as size:p,size:p,...");
  }

  BlockSpec spec() const {
    if (!blocks.empty()) return parse_blocks_arg(blocks);
    if (!config.empty()) return harness::load_config(config).spec;
    throw UsageError("give --config or --blocks");
  }
};

ordered_json blocks_json(const BlockSpec& spec) {
  ordered_json arr = ordered_json::array();
  for (const Block& b : spec.blocks()) arr.push_back({{"size", b.size}, {"probability", b.probability}});
  return arr;
}

ordered_json bound_json(const MeasurementBound& b) {
  return {{"constant", b.constant}, {"value", b.value}, {"ceiling", b.ceiling}};
}

void emit(const ordered_json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
  f << j.dump(2) << "\n";
}

// Monte-Carlo estimate of Pr(X_i < X_j) with its standard error.
std::pair<double, double> swap_monte_carlo(std::size_t ni, double qi, std::size_t nj, double qj,
                                           std::size_t trials, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0});
  std::binomial_distribution<std::size_t> bi(ni, qi);
  std::binomial_distribution<std::size_t> bj(nj, qj);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t a = bi(rng);
    const std::size_t b = bj(rng);
    if (a < b) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous wideband spectrum sensing toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a Monte-Carlo figure");
  simulate->require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_path;
  std::string format;
  std::vector<CLI::App*> figures;
  for (const char* name : {"mse", "epg", "roc", "sparsity"}) {
    auto* fig = simulate->add_subcommand(name);
    fig->add_option("--config", config_path, "experiment config (YAML)")->required();
    fig->add_option("--seed", seed, "root seed (overrides the config)");
    fig->add_option("--trials", trials, "trials per sweep point (overrides the config)");
    fig->add_option("--workers", workers, "worker threads");
    fig->add_option("--out", out_path, "output file (default: config output.path or stdout)");
    fig->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    figures.push_back(fig);
  }

  // bounds
  auto* bounds = app.add_subcommand("bounds", "closed-form calculators");
  bounds->require_subcommand(1);
  std::string out_json;

  auto* min_m = bounds->add_subcommand("min-m", "lower bound on the number of measurements");
  std::vector<double> kbars;
  std::vector<double> deltas{0.5};
  std::size_t n_bands = 256;
  std::string base = "natural";
  SpecSource min_m_src;
  std::optional<double> min_m_k0;
  min_m->add_option("--kbar", kbars, "average block sparsities kbar_i");
  min_m->add_option("--delta", deltas, "RIP constant(s), one or one per block");
  min_m->add_option("--n", n_bands, "number of bands");
  min_m->add_option("--base", base, "logarithm base")->check(CLI::IsMember({"natural", "binary"}));
  min_m_src.add(min_m);
  min_m->add_option("--k0", min_m_k0, "design sparsity level for the interpretation report");

  auto* theorem1 = bounds->add_subcommand("theorem1", "probability that weighting does not hurt");
  SpecSource t1_src;
  bool strict = false;
  t1_src.add(theorem1);
  theorem1->add_flag("--strict", strict, "reject blocks not ordered by n_i p_i");

  auto* swap = bounds->add_subcommand("swap", "probability a sparser block outnumbers a denser one");
  std::size_t ni = 64, nj = 64;
  double qi = 0.1, qj = 0.04;
  std::size_t mc_trials = 0;
  std::uint64_t mc_seed = 1;
  swap->add_option("--ni", ni);
  swap->add_option("--qi", qi);
  swap->add_option("--nj", nj);
  swap->add_option("--qj", qj);
  swap->add_option("--monte-carlo", mc_trials, "also estimate by simulation with this many trials");
  swap->add_option("--seed", mc_seed);

  auto* stability = bounds->add_subcommand("stability", "stable-recovery constants C0 and C1");
  double delta_ak = 0.0, delta_a1k = 0.0, a = 3.0;
  stability->add_option("--delta-ak", delta_ak);
  stability->add_option("--delta-a1k", delta_a1k);
  stability->add_option("--a", a);

  auto* chernoff = bounds->add_subcommand("chernoff", "lower bound on Pr(X <= k0)");
  SpecSource ch_src;
  std::optional<double> ch_k0;
  std::optional<double> ch_alpha;
  ch_src.add(chernoff);
  chernoff->add_option("--k0", ch_k0, "sparsity level");
  chernoff->add_option("--alpha", ch_alpha, "select the smallest k0 reaching 1 - alpha");

  for (auto* sub : {min_m, theorem1, swap, stability, chernoff}) {
    sub->add_option("--out", out_json, "write JSON here instead of stdout");
  }

  // pmf
  auto* pmf_cmd = app.add_subcommand("pmf", "exact distribution of the occupied-band count");
  SpecSource pmf_src;
  std::string pmf_format = "csv";
  pmf_src.add(pmf_cmd);
  pmf_cmd->add_option("--format", pmf_format)->check(CLI::IsMember({"csv", "jsonl"}));
  pmf_cmd->add_option("--out", out_path);

  // weights
  auto* weights_cmd = app.add_subcommand("weights", "block weights");
  SpecSource w_src;
  w_src.add(weights_cmd);
  weights_cmd->add_option("--out", out_json);

  // export
  auto* export_cmd = app.add_subcommand("export", "dump one trial's matrix and measurements");
  std::size_t ex_sweep = 0, ex_trial = 0;
  export_cmd->add_option("--config", config_path)->required();
  export_cmd->add_option("--seed", seed);
  export_cmd->add_option("--sweep", ex_sweep, "sweep point index");
  export_cmd->add_option("--trial", ex_trial, "trial index");
  export_cmd->add_option("--out", out_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), 2);
  }

  try {
    for (auto* fig : figures) {
      if (!fig->parsed()) continue;
      harness::ExperimentConfig cfg = harness::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (trials) {
        if (*trials < 1) throw UsageError("--trials must be >= 1");
        cfg.trials = *trials;
      }
      if (!format.empty()) {
        cfg.format = format == "csv" ? harness::OutputFormat::csv : harness::OutputFormat::jsonl;
      }
      if (!out_path.empty()) cfg.output_path = out_path;

      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!cfg.output_path.empty()) {
        file.open(cfg.output_path);
        if (!file) throw std::runtime_error("cannot open '" + cfg.output_path + "' for writing");
        os = &file;
      }
      harness::RunOptions run{workers, &std::cerr};
      const std::string name = fig->get_name();
      if (name == "mse") {
        harness::write_sweep(*os, "mse", cfg, harness::run_mse_sweep(cfg, run));
      } else if (name == "epg") {
        harness::write_sweep(*os, "epg", cfg, harness::run_epg_sweep(cfg, run));
      } else if (name == "roc") {
        harness::write_roc(*os, cfg, harness::run_roc(cfg, run));
      } else {
        harness::write_sparsity(*os, cfg, harness::run_sparsity_figure(cfg));
      }
      return 0;
    }

    if (min_m->parsed()) {
      ordered_json j;
      const LogBase lb = base == "binary" ? LogBase::binary : LogBase::natural;
      if (!kbars.empty()) {
        RipProfile profile;
        profile.sparsities = kbars;
        if (deltas.size() == 1) {
          profile.deltas.assign(kbars.size(), deltas[0]);
        } else {
          profile.deltas = deltas;
        }
        j["n"] = n_bands;
        j["kbar"] = kbars;
        j["delta"] = profile.deltas;
        j["base"] = base;
        j["bound"] = bound_json(min_measurements(profile, n_bands, lb));
      }
      if (!min_m_src.config.empty() || !min_m_src.blocks.empty()) {
        const BlockSpec spec = min_m_src.spec();
        const double k0 = min_m_k0 ? *min_m_k0
                                   : static_cast<double>(select_sparsity_level(spec, 0.04).k0);
        ordered_json report;
        report["blocks"] = blocks_json(spec);
        report["k0"] = k0;
        report["delta"] = deltas[0];
        report["reference_value"] = kReportedMeasurementCount;
        bool reproduced = false;
        ordered_json items = ordered_json::array();
        for (const auto& it : measurement_interpretations(spec, k0, deltas[0])) {
          const bool match = it.bound.ceiling == static_cast<std::size_t>(kReportedMeasurementCount);
          reproduced = reproduced || match;
          items.push_back({{"name", it.name},
                           {"description", it.description},
                           {"sparsities", it.profile.sparsities},
                           {"bound", bound_json(it.bound)},
                           {"matches_reference", match}});
        }
        report["interpretations"] = items;
        report["reproduced"] = reproduced;
        j["interpretation_report"] = report;
      }
      if (j.empty()) throw UsageError("min-m needs --kbar or --config/--blocks");
      emit(j, out_json);
    } else if (theorem1->parsed()) {
      const BlockSpec spec = t1_src.spec();
      const auto r = theorem1_success_probability(
          spec, strict ? OrderingPolicy::strict : OrderingPolicy::reorder);
      emit({{"blocks", blocks_json(spec)},
            {"probability", r.probability},
            {"violation_mass", r.violation_mass},
            {"reordered", r.reordered}},
           out_json);
    } else if (swap->parsed()) {
      ordered_json j = {{"ni", ni}, {"qi", qi}, {"nj", nj}, {"qj", qj},
                        {"probability", swap_probability(ni, qi, nj, qj)}};
      if (mc_trials > 0) {
        const auto [p, se] = swap_monte_carlo(ni, qi, nj, qj, mc_trials, mc_seed);
        j["monte_carlo"] = {{"trials", mc_trials}, {"estimate", p}, {"std_error", se}};
      }
      emit(j, out_json);
    } else if (stability->parsed()) {
      const auto c = stability_constants(delta_ak, delta_a1k, a);
      emit({{"delta_ak", delta_ak}, {"delta_a1k", delta_a1k}, {"a", a}, {"c0", c.c0}, {"c1", c.c1}},
           out_json);
    } else if (chernoff->parsed()) {
      const BlockSpec spec = ch_src.spec();
      ordered_json j = {{"mean_occupancy", spec.expected_occupancy()}};
      double k0 = 0.0;
      if (ch_alpha) {
        const auto level = select_sparsity_level(spec, *ch_alpha);
        j["alpha"] = *ch_alpha;
        j["saturated"] = level.saturated;
        k0 = static_cast<double>(level.k0);
      } else if (ch_k0) {
        k0 = *ch_k0;
      } else {
        throw UsageError("chernoff needs --k0 or --alpha");
      }
      const auto b = chernoff_tail_bound(k0, spec);
      j["k0"] = k0;
      j["bound"] = b.value;
      j["informative"] = b.informative;
      if (k0 >= 0.0 && k0 == std::floor(k0)) {
        j["exact_cdf"] = occupancy_pmf(spec).cdf(static_cast<std::size_t>(k0));
      }
      emit(j, out_json);
    } else if (pmf_cmd->parsed()) {
      const BlockSpec spec = pmf_src.spec();
      const OccupancyPmf pmf = occupancy_pmf(spec);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open '" + out_path + "' for writing");
        os = &file;
      }
      if (pmf_format == "csv") *os << "k,pmf,cdf,tail_above\n";
      double cdf = 0.0;
      for (std::size_t k = 0; k < pmf.probabilities.size(); ++k) {
        cdf = std::min(1.0, cdf + pmf.probabilities[k]);
        const double tail = pmf.tail_above(k);
        if (pmf_format == "csv") {
          *os << k << "," << harness::detail::fmt(pmf.probabilities[k]) << ","
              << harness::detail::fmt(cdf) << "," << harness::detail::fmt(tail) << "\n";
        } else {
          *os << ordered_json{{"k", k}, {"pmf", pmf.probabilities[k]}, {"cdf", cdf},
                              {"tail_above", tail}}.dump()
              << "\n";
        }
      }
    } else if (weights_cmd->parsed()) {
      const BlockSpec spec = w_src.spec();
      const WeightVector w = compute_weights(spec);
      ordered_json kb = ordered_json::array();
      for (std::size_t g = 0; g < spec.num_blocks(); ++g) kb.push_back(spec.average_sparsity(g));
      emit({{"blocks", blocks_json(spec)}, {"average_sparsity", kb}, {"omega", w.omega}}, out_json);
    } else if (export_cmd->parsed()) {
      harness::ExperimentConfig cfg = harness::load_config(config_path);
      if (seed) cfg.seed = *seed;
      const auto grid = harness::sweep_grid(cfg);
      if (ex_sweep >= grid.size()) throw UsageError("--sweep out of range");
      const auto data = harness::draw_trial(cfg, grid[ex_sweep], ex_trial);
      ordered_json j = {{"sweep", ex_sweep}, {"trial", ex_trial}, {"m", grid[ex_sweep].m},
                        {"snr_db", grid[ex_sweep].snr_db}, {"config_hash", harness::config_hash(cfg)}};
      if (!data) {
        j["skipped"] = true;
      } else {
        auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
        ordered_json rows = ordered_json::array();
        for (Eigen::Index r = 0; r < data->system.A.rows(); ++r) {
          rows.push_back(vec(data->system.A.row(r).transpose()));
        }
        j["skipped"] = false;
        j["A"] = rows;
        j["x"] = vec(data->instance.x);
        j["support"] = data->instance.support;
        j["y"] = vec(data->measurements.y);
        j["eta"] = vec(data->measurements.eta);
        j["noise_sigma"] = data->measurements.noise_sigma;
        j["epsilon"] = data->measurements.epsilon;
      }
      emit(j, out_json);
    }
  } catch (const harness::ConfigError& e) {
    fail("config", e.what(), 2);
  } catch (const UsageError& e) {
    fail("usage", e.what(), 2);
  } catch (const std::exception& e) {
    fail("runtime", e.what(), 1);
  }
  return 0;
}
