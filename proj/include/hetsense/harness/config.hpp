#pragma once

#include "hetsense/sensing.hpp"
#include "hetsense/solvers.hpp"
#include "hetsense/spectrum_model.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsense::harness {

/// Schema violation in an experiment config. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

enum class OutputFormat { csv, jsonl };

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "jsonl"; }

inline const char* to_string(AmplitudeModel m) {
  return m == AmplitudeModel::modulus ? "modulus" : "signed_magnitude";
}

struct SolverSettings {
  AdmmOptions admm;
  std::size_t greedy_max_iterations = 100;

  friend bool operator==(const SolverSettings& a, const SolverSettings& b) {
    return a.admm.tol_feas == b.admm.tol_feas && a.admm.tol_opt == b.admm.tol_opt &&
           a.admm.max_iterations == b.admm.max_iterations && a.admm.rho == b.admm.rho &&
           a.admm.adaptive_rho == b.admm.adaptive_rho &&
           a.admm.polish_every == b.admm.polish_every &&
           a.greedy_max_iterations == b.greedy_max_iterations;
  }
};

inline std::vector<double> default_pf_grid() {
  return {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
}

struct ExperimentConfig {
  BlockSpec spec;
  AmplitudeLaw amplitude;

  std::vector<std::size_t> measurements{27};
  std::vector<double> snr_db{20.0};
  SnrMode snr_mode = SnrMode::sensing;
  double epsilon_sd = 2.0;

  std::vector<SolverId> solvers{kAllSolvers.begin(), kAllSolvers.end()};
  SolverSettings solver_options;

  std::size_t trials = 200;
  std::uint64_t seed = 1;
  double alpha = 0.04;
  std::optional<std::size_t> sparsity_level; ///< derived from alpha when absent
  std::vector<double> pf_grid = default_pf_grid();
  std::size_t k0_min = 1;
  std::size_t k0_max = 40;
  bool exclude_nonconverged = false;

  std::string output_path;
  OutputFormat format = OutputFormat::csv;

  /// Design sparsity level k0.
  std::size_t effective_sparsity_level() const {
    return sparsity_level ? *sparsity_level : select_sparsity_level(spec, alpha).k0;
  }

  bool has_solver(SolverId id) const {
    for (SolverId s : solvers) {
      if (s == id) return true;
    }
    return false;
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

/// Checks that a mapping has no duplicate and no unknown keys.
inline void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!map.IsMap()) throw ConfigError(line_of(map), where + " must be a mapping");
  std::set<std::string> seen;
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!seen.insert(key).second) {
      throw ConfigError(line_of(kv.first), "duplicate key '" + key + "' in " + where);
    }
    if (!allowed.contains(key)) {
      throw ConfigError(line_of(kv.first), "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), what + " must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(line_of(node), "cannot parse " + what + " from '" + node.Scalar() + "'");
  }
}

/// Accepts either a scalar or a non-empty sequence of scalars.
template <typename T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& what) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(scalar<T>(item, what));
    if (out.empty()) throw ConfigError(line_of(node), what + " must not be empty");
  } else {
    out.push_back(scalar<T>(node, what));
  }
  return out;
}

inline BlockSpec parse_blocks(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() == 0) {
    throw ConfigError(line_of(node), "spectrum.blocks must be a non-empty list");
  }
  std::vector<Block> blocks;
  for (const auto& item : node) {
    check_keys(item, {"size", "probability", "count"}, "spectrum.blocks entry");
    if (!item["size"] || !item["probability"]) {
      throw ConfigError(line_of(item), "block entry needs 'size' and 'probability'");
    }
    const auto size = scalar<long long>(item["size"], "block size");
    const auto p = scalar<double>(item["probability"], "block probability");
    const auto count = item["count"] ? scalar<long long>(item["count"], "block count") : 1LL;
    if (size < 1) throw ConfigError(line_of(item["size"]), "block size must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(line_of(item["probability"]), "block probability must lie in [0,1]");
    }
    if (count < 1) throw ConfigError(line_of(item["count"]), "block count must be >= 1");
    for (long long c = 0; c < count; ++c) {
      blocks.push_back({static_cast<std::size_t>(size), p});
    }
  }
  return BlockSpec(std::move(blocks));
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  using detail::check_keys;
  using detail::line_of;
  using detail::scalar;
  using detail::scalar_or_list;

  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.mark.line + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(0, "empty config");
  check_keys(root, {"spectrum", "sensing", "solvers", "solver_options", "experiment", "output"},
             "top level");

  ExperimentConfig cfg;

  const YAML::Node spectrum = root["spectrum"];
  if (!spectrum) throw ConfigError(1, "missing required section 'spectrum'");
  check_keys(spectrum, {"blocks", "amplitude"}, "spectrum");
  if (!spectrum["blocks"]) throw ConfigError(line_of(spectrum), "missing spectrum.blocks");
  cfg.spec = detail::parse_blocks(spectrum["blocks"]);
  if (const YAML::Node amp = spectrum["amplitude"]) {
    check_keys(amp, {"min", "max", "scale", "model"}, "spectrum.amplitude");
    if (amp["min"]) cfg.amplitude.min_magnitude = scalar<double>(amp["min"], "amplitude.min");
    if (amp["max"]) cfg.amplitude.max_magnitude = scalar<double>(amp["max"], "amplitude.max");
    if (amp["scale"]) cfg.amplitude.scale = scalar<double>(amp["scale"], "amplitude.scale");
    if (amp["model"]) {
      const auto model = scalar<std::string>(amp["model"], "amplitude.model");
      if (model == "signed_magnitude") {
        cfg.amplitude.model = AmplitudeModel::signed_magnitude;
      } else if (model == "modulus") {
        cfg.amplitude.model = AmplitudeModel::modulus;
      } else {
        throw ConfigError(line_of(amp["model"]), "amplitude.model must be signed_magnitude or modulus");
      }
    }
    if (!(cfg.amplitude.min_magnitude > 0.0) ||
        cfg.amplitude.max_magnitude < cfg.amplitude.min_magnitude ||
        !(cfg.amplitude.scale > 0.0)) {
      throw ConfigError(line_of(amp), "amplitude needs 0 < min <= max and scale > 0");
    }
  }

  if (const YAML::Node sensing = root["sensing"]) {
    check_keys(sensing, {"measurements", "snr_db", "snr_mode", "epsilon_sd"}, "sensing");
    if (sensing["measurements"]) {
      cfg.measurements.clear();
      for (long long m : scalar_or_list<long long>(sensing["measurements"], "sensing.measurements")) {
        if (m < 1) throw ConfigError(line_of(sensing["measurements"]), "measurement count must be >= 1");
        cfg.measurements.push_back(static_cast<std::size_t>(m));
      }
    }
    if (sensing["snr_db"]) cfg.snr_db = scalar_or_list<double>(sensing["snr_db"], "sensing.snr_db");
    if (sensing["snr_mode"]) {
      const auto mode = scalar<std::string>(sensing["snr_mode"], "sensing.snr_mode");
      if (mode == "sensing") {
        cfg.snr_mode = SnrMode::sensing;
      } else if (mode == "received") {
        cfg.snr_mode = SnrMode::received;
      } else {
        throw ConfigError(line_of(sensing["snr_mode"]), "snr_mode must be sensing or received");
      }
    }
    if (sensing["epsilon_sd"]) {
      cfg.epsilon_sd = scalar<double>(sensing["epsilon_sd"], "sensing.epsilon_sd");
    }
  }

  const YAML::Node solvers = root["solvers"];
  if (!solvers) throw ConfigError(1, "missing required key 'solvers'");
  cfg.solvers.clear();
  {
    std::set<SolverId> seen;
    for (const auto& name : scalar_or_list<std::string>(solvers, "solvers")) {
      const auto id = parse_solver_id(name);
      if (!id) throw ConfigError(line_of(solvers), "unknown solver '" + name + "'");
      if (!seen.insert(*id).second) {
        throw ConfigError(line_of(solvers), "solver '" + name + "' listed twice");
      }
      cfg.solvers.push_back(*id);
    }
  }

  if (const YAML::Node so = root["solver_options"]) {
    check_keys(so, {"tol_feas", "tol_opt", "max_iterations", "rho", "adaptive_rho", "polish_every",
                    "greedy_max_iterations"},
               "solver_options");
    auto& a = cfg.solver_options.admm;
    if (so["tol_feas"]) a.tol_feas = scalar<double>(so["tol_feas"], "tol_feas");
    if (so["tol_opt"]) a.tol_opt = scalar<double>(so["tol_opt"], "tol_opt");
    if (so["max_iterations"]) a.max_iterations = scalar<std::size_t>(so["max_iterations"], "max_iterations");
    if (so["rho"]) a.rho = scalar<double>(so["rho"], "rho");
    if (so["adaptive_rho"]) a.adaptive_rho = scalar<bool>(so["adaptive_rho"], "adaptive_rho");
    if (so["polish_every"]) a.polish_every = scalar<std::size_t>(so["polish_every"], "polish_every");
    if (so["greedy_max_iterations"]) {
      cfg.solver_options.greedy_max_iterations =
          scalar<std::size_t>(so["greedy_max_iterations"], "greedy_max_iterations");
    }
    if (!(a.rho > 0.0)) throw ConfigError(line_of(so), "rho must be positive");
  }

  if (const YAML::Node ex = root["experiment"]) {
    check_keys(ex, {"trials", "seed", "alpha", "sparsity_level", "pf_grid", "k0_range",
                    "exclude_nonconverged"},
               "experiment");
    if (ex["trials"]) {
      const auto t = scalar<long long>(ex["trials"], "experiment.trials");
      if (t < 1) throw ConfigError(line_of(ex["trials"]), "trials must be >= 1");
      cfg.trials = static_cast<std::size_t>(t);
    }
    if (ex["seed"]) cfg.seed = scalar<std::uint64_t>(ex["seed"], "experiment.seed");
    if (ex["alpha"]) {
      cfg.alpha = scalar<double>(ex["alpha"], "experiment.alpha");
      if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ConfigError(line_of(ex["alpha"]), "alpha must lie in (0,1)");
      }
    }
    if (ex["sparsity_level"]) {
      const auto k0 = scalar<long long>(ex["sparsity_level"], "experiment.sparsity_level");
      if (k0 < 1) throw ConfigError(line_of(ex["sparsity_level"]), "sparsity_level must be >= 1");
      cfg.sparsity_level = static_cast<std::size_t>(k0);
    }
    if (ex["pf_grid"]) {
      cfg.pf_grid = scalar_or_list<double>(ex["pf_grid"], "experiment.pf_grid");
      for (double pf : cfg.pf_grid) {
        if (!(pf > 0.0 && pf < 1.0)) {
          throw ConfigError(line_of(ex["pf_grid"]), "pf_grid entries must lie in (0,1)");
        }
      }
    }
    if (ex["k0_range"]) {
      const auto range = scalar_or_list<long long>(ex["k0_range"], "experiment.k0_range");
      if (range.size() != 2 || range[0] < 0 || range[1] < range[0]) {
        throw ConfigError(line_of(ex["k0_range"]), "k0_range must be [min, max] with 0 <= min <= max");
      }
      cfg.k0_min = static_cast<std::size_t>(range[0]);
      cfg.k0_max = static_cast<std::size_t>(range[1]);
    }
    if (ex["exclude_nonconverged"]) {
      cfg.exclude_nonconverged = scalar<bool>(ex["exclude_nonconverged"], "exclude_nonconverged");
    }
  }

  if (const YAML::Node out = root["output"]) {
    check_keys(out, {"path", "format"}, "output");
    if (out["path"]) cfg.output_path = scalar<std::string>(out["path"], "output.path");
    if (out["format"]) {
      const auto f = scalar<std::string>(out["format"], "output.format");
      if (f == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (f == "jsonl") {
        cfg.format = OutputFormat::jsonl;
      } else {
        throw ConfigError(line_of(out["format"]), "output.format must be csv or jsonl");
      }
    }
  }

  for (std::size_t m : cfg.measurements) {
    if (m > cfg.spec.num_bands()) {
      const YAML::Node at = root["sensing"] && root["sensing"]["measurements"]
                                ? root["sensing"]["measurements"]
                                : spectrum["blocks"];
      throw ConfigError(line_of(at), "measurement count " + std::to_string(m) +
                                         " exceeds the number of bands " +
                                         std::to_string(cfg.spec.num_bands()));
    }
  }

  if (cfg.has_solver(SolverId::weighted_l1)) {
    for (std::size_t g = 0; g < cfg.spec.num_blocks(); ++g) {
      if (!(cfg.spec.average_sparsity(g) > 0.0)) {
        throw ConfigError(line_of(spectrum["blocks"]),
                          "weighted_l1 needs every block to have positive average sparsity "
                          "(merge or drop empty blocks)");
      }
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Canonical YAML rendering with every default spelled out. Parsing the
/// output yields an equal config.
inline std::string to_yaml(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;

  e << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "blocks" << YAML::Value << YAML::BeginSeq;
  for (const Block& b : cfg.spec.blocks()) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "size" << YAML::Value << b.size
      << YAML::Key << "probability" << YAML::Value << b.probability << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "amplitude" << YAML::Value << YAML::BeginMap
    << YAML::Key << "min" << YAML::Value << cfg.amplitude.min_magnitude
    << YAML::Key << "max" << YAML::Value << cfg.amplitude.max_magnitude
    << YAML::Key << "scale" << YAML::Value << cfg.amplitude.scale
    << YAML::Key << "model" << YAML::Value << to_string(cfg.amplitude.model) << YAML::EndMap;
  e << YAML::EndMap;

  e << YAML::Key << "sensing" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "measurements" << YAML::Value << YAML::Flow << cfg.measurements;
  e << YAML::Key << "snr_db" << YAML::Value << YAML::Flow << cfg.snr_db;
  e << YAML::Key << "snr_mode" << YAML::Value << to_string(cfg.snr_mode);
  e << YAML::Key << "epsilon_sd" << YAML::Value << cfg.epsilon_sd;
  e << YAML::EndMap;

  e << YAML::Key << "solvers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (SolverId s : cfg.solvers) e << std::string(to_string(s));
  e << YAML::EndSeq;

  const auto& a = cfg.solver_options.admm;
  e << YAML::Key << "solver_options" << YAML::Value << YAML::BeginMap
    << YAML::Key << "tol_feas" << YAML::Value << a.tol_feas
    << YAML::Key << "tol_opt" << YAML::Value << a.tol_opt
    << YAML::Key << "max_iterations" << YAML::Value << a.max_iterations
    << YAML::Key << "rho" << YAML::Value << a.rho
    << YAML::Key << "adaptive_rho" << YAML::Value << a.adaptive_rho
    << YAML::Key << "polish_every" << YAML::Value << a.polish_every
    << YAML::Key << "greedy_max_iterations" << YAML::Value
    << cfg.solver_options.greedy_max_iterations << YAML::EndMap;

  e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "trials" << YAML::Value << cfg.trials;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "alpha" << YAML::Value << cfg.alpha;
  if (cfg.sparsity_level) e << YAML::Key << "sparsity_level" << YAML::Value << *cfg.sparsity_level;
  e << YAML::Key << "pf_grid" << YAML::Value << YAML::Flow << cfg.pf_grid;
  e << YAML::Key << "k0_range" << YAML::Value << YAML::Flow << YAML::BeginSeq << cfg.k0_min
    << cfg.k0_max << YAML::EndSeq;
  e << YAML::Key << "exclude_nonconverged" << YAML::Value << cfg.exclude_nonconverged;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "path" << YAML::Value << cfg.output_path;
  e << YAML::Key << "format" << YAML::Value << to_string(cfg.format);
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

/// 64-bit FNV-1a of the canonical rendering, as 16 hex digits. The output
/// section does not enter the hash.
inline std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig hashed = cfg;
  hashed.output_path.clear();
  hashed.format = OutputFormat::csv;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_yaml(hashed)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

} // namespace hetsense::harness
