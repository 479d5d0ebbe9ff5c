#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdopfo/engine.hpp"
#include "qdopfo/metrics.hpp"

namespace qdopfo {

// Experiment runner configuration. Preset defaults reproduce the reference
// parameter set n=10, d=30, rho=5e-6, alpha=1/(2 T^0.3) at T=2000, 5 seeds.
struct ExperimentConfig {
  std::string preset = "custom";
  int n = 10;
  int d = 30;
  std::uint64_t T = 2000;
  double rho = 5e-6;
  std::optional<double> alpha;   // default 1/(2 T^0.3) when no schedule given
  std::optional<double> kappa2;  // with gamma: alpha = kappa2 / T^gamma
  std::optional<double> gamma;
  std::string quantizer = "probabilistic";  // identity | probabilistic | k_level
  double level_exp = 1.5;
  std::optional<std::uint64_t> level_cap;
  std::optional<double> resolution_kappa1;  // with xi: eps_t = kappa1 / t^xi
  std::optional<double> resolution_xi;
  std::string graph = "random_window";  // complete | ring | gossip_pairs | random_window
  int window_Q = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out = "out";
  int samples = 4096;  // variation-estimate sample count
  int threads = 0;

  bool operator==(const ExperimentConfig&) const = default;

  double effective_alpha() const;
  void validate_values() const;  // throws ConfigError
};

using KeyValues = std::map<std::string, std::string>;

// plain-text "key = value" config file; '#' starts a comment
KeyValues parse_config_file(const std::string& path);
// apply flag-style keys onto a config; unknown key throws ConfigError
ExperimentConfig build_config(const KeyValues& kv,
                              const ExperimentConfig& base = {});
KeyValues config_to_keyvalues(const ExperimentConfig& cfg);

struct Variant {
  std::string name;
  ExperimentConfig cfg;
};

std::vector<Variant> expand_variants(const ExperimentConfig& base);

// per-run stream separation
std::uint64_t engine_seed(std::uint64_t seed, const std::string& variant_name);
std::uint64_t graph_seed(std::uint64_t seed);

struct Finding {
  std::string check;
  bool ok = false;
  std::string detail;
};

std::vector<Finding> validate(const ExperimentConfig& cfg);
// lower-level assumption checks against an arbitrary weight sequence
std::vector<Finding> validate_assumptions(
    const std::function<Eigen::MatrixXd(std::uint64_t)>& weights, int n,
    std::uint64_t T, int Q, const ConstraintSet& set,
    const OnlineProblem* problem);

// executes all (variant, seed) runs, writes trace CSVs, per-variant summary
// JSONs and a manifest; returns 0 on success
int run_experiment(const ExperimentConfig& cfg);

// reconstruct the effective config recorded in a manifest
ExperimentConfig parse_manifest(const std::string& path);

// full CLI: subcommands `run` and `validate`
// exit codes: 0 ok, 2 config error, 3 assumption violation, 4 runtime failure
int cli_main(int argc, const char* const* argv);

}  // namespace qdopfo
