#include "qdopfo/experiment.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "qdopfo/errors.hpp"
#include "qdopfo/report.hpp"
#include "qdopfo/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qdopfo {

namespace {

constexpr double kSetRadius = 2.0;  // the experiment's l1 ball

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value +
                      "' as a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value +
                      "' as an integer");
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  if (value.find(',') == std::string::npos) {
    const std::int64_t count = parse_int("seeds", value);
    if (count < 1) throw ConfigError("config key 'seeds': need at least one seed");
    for (std::int64_t s = 1; s <= count; ++s)
      seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", item)));
  }
  if (seeds.empty()) throw ConfigError("config key 'seeds': empty list");
  return seeds;
}

std::string seeds_to_string(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

QuantizerKind parse_quantizer_kind(const std::string& name) {
  if (name == "identity") return QuantizerKind::Identity;
  if (name == "probabilistic") return QuantizerKind::Probabilistic;
  if (name == "k_level") return QuantizerKind::KLevel;
  throw ConfigError("config key 'quantizer': unknown kind '" + name +
                    "' (identity | probabilistic | k_level)");
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "complete") return GraphKind::Complete;
  if (name == "ring") return GraphKind::Ring;
  if (name == "gossip_pairs") return GraphKind::GossipPairs;
  if (name == "random_window") return GraphKind::RandomWindow;
  throw ConfigError("config key 'graph': unknown kind '" + name +
                    "' (complete | ring | gossip_pairs | random_window)");
}

struct QuantizerPair {
  QuantizerSpec state;
  QuantizerSpec grad;
};

QuantizerPair make_quantizers(const ExperimentConfig& cfg, double R, double L_X) {
  QuantizerSpec spec;
  spec.kind = parse_quantizer_kind(cfg.quantizer);
  if (cfg.resolution_kappa1 || cfg.resolution_xi) {
    spec.schedule =
        LevelSchedule::resolution(*cfg.resolution_kappa1, *cfg.resolution_xi);
  } else {
    spec.schedule = LevelSchedule::power(cfg.level_exp);
  }
  spec.cap = cfg.level_cap;
  QuantizerPair pair{spec, spec};
  pair.state.value_range = R;
  pair.grad.value_range = std::max(L_X, 1.0);
  return pair;
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (static_cast<double>(xs.size() - 1) *
                         static_cast<double>(xs.size())));
}

}  // namespace

double ExperimentConfig::effective_alpha() const {
  if (alpha) return *alpha;
  if (kappa2 && gamma) return alpha_from_schedule(*kappa2, *gamma, T);
  return 1.0 / (2.0 * std::pow(static_cast<double>(T), 0.3));
}

void ExperimentConfig::validate_values() const {
  if (preset != "custom" && preset != "fig1_levels" && preset != "fig2_cap" &&
      preset != "fig3_stepsizes" && preset != "fig4_agents")
    throw ConfigError("config key 'preset': unknown preset '" + preset + "'");
  if (n < 1) throw ConfigError("config key 'n': agent count must be >= 1");
  if (d < 1) throw ConfigError("config key 'd': dimension must be >= 1");
  if (T < 1) throw ConfigError("config key 'T': horizon must be >= 1");
  if (rho < 0.0) throw ConfigError("config key 'rho': regularizer must be >= 0");
  if (alpha && (kappa2 || gamma))
    throw ConfigError("config: give either 'alpha' or the ('kappa2', 'gamma') schedule, not both");
  if ((kappa2 && !gamma) || (gamma && !kappa2))
    throw ConfigError("config: 'kappa2' and 'gamma' must be given together");
  const double a = effective_alpha();  // throws for a bad schedule
  if (!(a > 0.0 && a <= 1.0))
    throw ConfigError("config key 'alpha': parameter 0 < α ≤ 1 is required, got " +
                      format_double(a));
  parse_quantizer_kind(quantizer);
  if (!(level_exp >= 0.0))
    throw ConfigError("config key 'level-exp': exponent must be >= 0");
  if (level_cap && *level_cap < 1)
    throw ConfigError("config key 'level-cap': cap B must be >= 1");
  if ((resolution_kappa1 && !resolution_xi) || (resolution_xi && !resolution_kappa1))
    throw ConfigError("config: 'resolution-kappa1' and 'resolution-xi' must be given together");
  if (resolution_kappa1 && !(*resolution_kappa1 > 0.0))
    throw ConfigError("config key 'resolution-kappa1': must be > 0");
  if (resolution_xi && !(*resolution_xi > 0.0))
    throw ConfigError("config key 'resolution-xi': must be > 0");
  parse_graph_kind(graph);
  if (window_Q < 1) throw ConfigError("config key 'window-Q': must be >= 1");
  if (seeds.empty()) throw ConfigError("config key 'seeds': need at least one seed");
  if (samples < 1) throw ConfigError("config key 'samples': must be >= 1");
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file '" + path + "' cannot be opened");
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config file '" + path + "' line " +
                        std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config file '" + path + "' line " +
                        std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

ExperimentConfig build_config(const KeyValues& kv, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  for (const auto& [key, value] : kv) {
    if (key == "preset") cfg.preset = value;
    else if (key == "n") cfg.n = static_cast<int>(parse_int(key, value));
    else if (key == "d") cfg.d = static_cast<int>(parse_int(key, value));
    else if (key == "T") cfg.T = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "kappa2") cfg.kappa2 = parse_double(key, value);
    else if (key == "quantizer") cfg.quantizer = value;
    else if (key == "level-exp") cfg.level_exp = parse_double(key, value);
    else if (key == "level-cap") {
      if (value == "none") cfg.level_cap.reset();
      else cfg.level_cap = static_cast<std::uint64_t>(parse_int(key, value));
    }
    else if (key == "resolution-kappa1") cfg.resolution_kappa1 = parse_double(key, value);
    else if (key == "resolution-xi") cfg.resolution_xi = parse_double(key, value);
    else if (key == "graph") cfg.graph = value;
    else if (key == "window-Q") cfg.window_Q = static_cast<int>(parse_int(key, value));
    else if (key == "seeds") cfg.seeds = parse_seeds(value);
    else if (key == "out") cfg.out = value;
    else if (key == "samples") cfg.samples = static_cast<int>(parse_int(key, value));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return cfg;
}

KeyValues config_to_keyvalues(const ExperimentConfig& cfg) {
  KeyValues kv;
  kv["preset"] = cfg.preset;
  kv["n"] = std::to_string(cfg.n);
  kv["d"] = std::to_string(cfg.d);
  kv["T"] = std::to_string(cfg.T);
  kv["rho"] = format_double(cfg.rho);
  if (cfg.alpha) kv["alpha"] = format_double(*cfg.alpha);
  if (cfg.kappa2) kv["kappa2"] = format_double(*cfg.kappa2);
  if (cfg.gamma) kv["gamma"] = format_double(*cfg.gamma);
  kv["quantizer"] = cfg.quantizer;
  kv["level-exp"] = format_double(cfg.level_exp);
  if (cfg.level_cap) kv["level-cap"] = std::to_string(*cfg.level_cap);
  if (cfg.resolution_kappa1) kv["resolution-kappa1"] = format_double(*cfg.resolution_kappa1);
  if (cfg.resolution_xi) kv["resolution-xi"] = format_double(*cfg.resolution_xi);
  kv["graph"] = cfg.graph;
  kv["window-Q"] = std::to_string(cfg.window_Q);
  kv["seeds"] = seeds_to_string(cfg.seeds);
  kv["out"] = cfg.out;
  kv["samples"] = std::to_string(cfg.samples);
  kv["threads"] = std::to_string(cfg.threads);
  return kv;
}

std::vector<Variant> expand_variants(const ExperimentConfig& base) {
  std::vector<Variant> variants;
  auto with = [&](const std::string& name,
                  const std::function<void(ExperimentConfig&)>& mutate) {
    ExperimentConfig cfg = base;
    mutate(cfg);
    variants.push_back(Variant{name, std::move(cfg)});
  };
  if (base.preset == "custom") {
    with("custom", [](ExperimentConfig&) {});
  } else if (base.preset == "fig1_levels") {
    with("identity", [](ExperimentConfig& c) { c.quantizer = "identity"; });
    const std::pair<const char*, double> levels[] = {{"levels_p0.8", 0.8},
                                                     {"levels_p1.0", 1.0},
                                                     {"levels_p1.3", 1.3},
                                                     {"levels_p1.5", 1.5}};
    for (const auto& [name, p] : levels) {
      with(name, [p](ExperimentConfig& c) {
        c.quantizer = "probabilistic";
        c.level_exp = p;
        c.resolution_kappa1.reset();
        c.resolution_xi.reset();
      });
    }
  } else if (base.preset == "fig2_cap") {
    for (const std::uint64_t B : {std::uint64_t{50}, std::uint64_t{80},
                                  std::uint64_t{100}}) {
      with("cap_B" + std::to_string(B), [B](ExperimentConfig& c) {
        c.quantizer = "probabilistic";
        c.level_exp = 1.5;
        c.level_cap = B;
      });
    }
    with("cap_none", [](ExperimentConfig& c) {
      c.quantizer = "probabilistic";
      c.level_exp = 1.5;
      c.level_cap.reset();
    });
  } else if (base.preset == "fig3_stepsizes") {
    with("alpha_horizon", [](ExperimentConfig& c) {
      c.quantizer = "probabilistic";
      c.level_exp = 1.5;
      c.alpha.reset();
      c.kappa2.reset();
      c.gamma.reset();
    });
    const std::pair<const char*, double> steps[] = {{"alpha_0.2", 0.2},
                                                    {"alpha_0.1", 0.1},
                                                    {"alpha_0.05", 0.05},
                                                    {"alpha_0.02", 0.02}};
    for (const auto& [name, a] : steps) {
      with(name, [a](ExperimentConfig& c) {
        c.quantizer = "probabilistic";
        c.level_exp = 1.5;
        c.alpha = a;
        c.kappa2.reset();
        c.gamma.reset();
      });
    }
  } else if (base.preset == "fig4_agents") {
    for (const int agents : {10, 30, 50}) {
      with("agents_n" + std::to_string(agents), [agents](ExperimentConfig& c) {
        c.quantizer = "probabilistic";
        c.level_exp = 1.5;
        c.n = agents;
      });
    }
  } else {
    throw ConfigError("config key 'preset': unknown preset '" + base.preset + "'");
  }
  return variants;
}

std::uint64_t engine_seed(std::uint64_t seed, const std::string& variant_name) {
  return mix_key(seed, hash_string(variant_name.c_str()), 0x9d2c5680ULL);
}

std::uint64_t graph_seed(std::uint64_t seed) {
  return mix_key(seed, hash_string("graph-topology"));
}

std::vector<Finding> validate_assumptions(
    const std::function<Eigen::MatrixXd(std::uint64_t)>& weights, int n,
    std::uint64_t T, int Q, const ConstraintSet& set,
    const OnlineProblem* problem) {
  std::vector<Finding> findings;
  bool ds_ok = true;
  std::uint64_t bad_round = 0;
  for (std::uint64_t t = 1; t <= T; ++t) {
    if (!check_double_stochastic(weights(t), 1e-9)) {
      ds_ok = false;
      bad_round = t;
      break;
    }
  }
  findings.push_back(
      {"double-stochasticity", ds_ok,
       ds_ok ? "all row and column sums within tolerance of 1"
             : "round " + std::to_string(bad_round) + " is not doubly stochastic"});
  const bool conn = check_joint_connectivity(weights, n, T, Q);
  findings.push_back(
      {"assumption-1 joint connectivity", conn,
       conn ? "every " + std::to_string(Q) + "-round window union is strongly connected"
            : "a " + std::to_string(Q) +
                  "-round window union is not strongly connected"});
  bool set_ok = true;
  std::string set_detail = "convex compact set with enclosing radius " +
                           format_double(set.enclosing_radius());
  try {
    set.validate();
  } catch (const std::exception& e) {
    set_ok = false;
    set_detail = e.what();
  }
  findings.push_back({"assumption-2 constraint set", set_ok, set_detail});
  if (problem) {
    ProblemConstants pc = estimate_constants(*problem, set);
    const bool ok = std::isfinite(pc.L_X) && std::isfinite(pc.G_X) &&
                    pc.L_X > 0.0 && pc.G_X > 0.0;
    findings.push_back(
        {"assumptions-3/4 Lipschitz constants", ok,
         "L_X = " + format_double(pc.L_X) + ", G_X = " + format_double(pc.G_X)});
  }
  return findings;
}

std::vector<Finding> validate(const ExperimentConfig& cfg) {
  std::vector<Finding> findings;
  bool cfg_ok = true;
  std::string cfg_detail = "all values in range";
  try {
    cfg.validate_values();
  } catch (const std::exception& e) {
    cfg_ok = false;
    cfg_detail = e.what();
  }
  findings.push_back({"config", cfg_ok, cfg_detail});
  const bool rho_ok = cfg.rho >= 0.0;
  findings.push_back({"problem-validity", rho_ok,
                      rho_ok ? "rho >= 0" : "rho must be >= 0, got " +
                                                format_double(cfg.rho)});
  if (!cfg_ok || !rho_ok) return findings;

  const ConstraintSet set = make_l1_ball(cfg.d, kSetRadius);
  const std::uint64_t s0 = cfg.seeds.front();
  const OnlineProblem problem = OnlineProblem::regression_stream(
      s0, cfg.n, cfg.d, cfg.T, cfg.rho, std::nullopt, set);
  try {
    const GraphSequence graphs = generate_graphs(
        parse_graph_kind(cfg.graph), cfg.n, cfg.T, cfg.window_Q, graph_seed(s0));
    auto sub = validate_assumptions(
        [&graphs](std::uint64_t t) { return graphs.weight_matrix(t); }, cfg.n,
        cfg.T, cfg.window_Q, set, &problem);
    findings.insert(findings.end(), sub.begin(), sub.end());
  } catch (const AssumptionError& e) {
    findings.push_back({"assumption-1 joint connectivity", false, e.what()});
  }
  return findings;
}

namespace {

struct ProblemBundle {
  ComparatorSet comparators;
  ProblemConstants constants;
  Variations vars;
};

struct SeedOutcome {
  double final_avg = 0.0;
  double bound = 0.0;
  double H_T = 0.0, D_T = 0.0;
  bool vars_exact = false;
  double total_bits = 0.0;
  double max_gap = 0.0;
  std::vector<double> final_regret;  // per agent
  BoundConstants constants;
};

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  cfg.validate_values();
  const std::vector<Variant> variants = expand_variants(cfg);
  fs::create_directories(cfg.out);

  std::map<std::string, ProblemBundle> cache;
  json manifest;
  manifest["preset"] = cfg.preset;
  manifest["out"] = cfg.out;
  manifest["common"] = config_to_keyvalues(cfg);
  manifest["variants"] = json::array();

  for (const Variant& variant : variants) {
    const ExperimentConfig& vc = variant.cfg;
    const ConstraintSet set = make_l1_ball(vc.d, kSetRadius);
    const double alpha = vc.effective_alpha();
    std::vector<SeedOutcome> outcomes;
    std::vector<std::string> trace_files;

    for (const std::uint64_t seed : vc.seeds) {
      const OnlineProblem problem = OnlineProblem::regression_stream(
          seed, vc.n, vc.d, vc.T, vc.rho, std::nullopt, set);
      std::ostringstream key;
      key << vc.n << '|' << vc.d << '|' << vc.T << '|'
          << format_double(vc.rho) << '|' << seed << '|' << vc.samples;
      auto it = cache.find(key.str());
      if (it == cache.end()) {
        ProblemBundle bundle;
        bundle.comparators =
            solve_comparators(problem, set, 1e-8, 100000, vc.threads);
        bundle.constants = estimate_constants(problem, set);
        bundle.vars = variations(problem, set, vc.samples);
        it = cache.emplace(key.str(), std::move(bundle)).first;
      }
      const ProblemBundle& bundle = it->second;

      const GraphSequence graphs =
          generate_graphs(parse_graph_kind(vc.graph), vc.n, vc.T, vc.window_Q,
                          graph_seed(seed));
      const QuantizerPair qs = make_quantizers(vc, set.enclosing_radius(),
                                               bundle.constants.L_X);
      RunConfig rc;
      rc.problem = &problem;
      rc.graphs = &graphs;
      rc.set = &set;
      rc.state_quantizer = qs.state;
      rc.grad_quantizer = qs.grad;
      rc.alpha = alpha;
      rc.seed = engine_seed(seed, variant.name);
      const Trace trace = run(rc);

      ReportOptions opts;
      opts.threads = vc.threads;
      opts.variation_samples = vc.samples;
      const RegretReport report =
          make_report(trace, problem, set, graphs, qs.state, alpha, opts,
                      &bundle.comparators, &bundle.constants, &bundle.vars);

      const std::string trace_name =
          "trace_" + variant.name + "_seed" + std::to_string(seed) + ".csv";
      std::ofstream csv(fs::path(cfg.out) / trace_name, std::ios::binary);
      if (!csv) throw RuntimeFailure("cannot write " + trace_name);
      write_trace_csv(csv, trace, report);
      trace_files.push_back(trace_name);

      SeedOutcome oc;
      oc.final_avg = report.final_global_avg();
      oc.bound = report.bound_value;
      oc.H_T = report.H_T;
      oc.D_T = report.D_T;
      oc.vars_exact = report.variations_exact;
      oc.total_bits = static_cast<double>(report.total_bits);
      oc.max_gap =
          *std::max_element(report.comparator_gap.begin(), report.comparator_gap.end());
      for (int j = 0; j < vc.n; ++j)
        oc.final_regret.push_back(report.regret[j][trace.T - 1]);
      oc.constants = report.constants;
      outcomes.push_back(std::move(oc));
    }

    // seed-averaged summary
    auto collect = [&](auto&& get) {
      std::vector<double> xs;
      for (const auto& oc : outcomes) xs.push_back(get(oc));
      return xs;
    };
    const std::vector<double> finals =
        collect([](const SeedOutcome& o) { return o.final_avg; });
    const std::vector<double> bounds =
        collect([](const SeedOutcome& o) { return o.bound; });
    const std::vector<double> hts =
        collect([](const SeedOutcome& o) { return o.H_T; });
    const std::vector<double> dts =
        collect([](const SeedOutcome& o) { return o.D_T; });
    const std::vector<double> bits =
        collect([](const SeedOutcome& o) { return o.total_bits; });
    const std::vector<double> gaps =
        collect([](const SeedOutcome& o) { return o.max_gap; });

    std::vector<double> regret_per_agent(vc.n, 0.0);
    for (const auto& oc : outcomes)
      for (int j = 0; j < vc.n; ++j)
        regret_per_agent[j] += oc.final_regret[j] / outcomes.size();
    double mean_final_regret = 0.0;
    for (double r : regret_per_agent) mean_final_regret += r / vc.n;

    json summary;
    summary["variant"] = variant.name;
    summary["config"] = config_to_keyvalues(vc);
    summary["alpha"] = alpha;
    summary["final_global_avg_regret"] = {{"per_seed", finals},
                                          {"mean", mean_of(finals)},
                                          {"stderr", stderr_of(finals)}};
    summary["final_regret_per_agent_mean"] = regret_per_agent;
    summary["H_T"] = {{"per_seed", hts}, {"mean", mean_of(hts)}};
    summary["D_T"] = {{"per_seed", dts}, {"mean", mean_of(dts)}};
    summary["variations_note"] =
        outcomes.front().vars_exact
            ? "exact"
            : "sampled estimate; lower bound of the suprema";
    summary["total_bits"] = {{"per_seed", bits}, {"mean", mean_of(bits)}};
    summary["bound"] = {{"per_seed", bounds}, {"mean", mean_of(bounds)}};
    if (mean_final_regret > 0.0)
      summary["bound_over_mean_final_regret"] =
          mean_of(bounds) / mean_final_regret;
    summary["comparator_gap_max"] =
        *std::max_element(gaps.begin(), gaps.end());
    const BoundConstants& bc = outcomes.front().constants;
    summary["constants"] = {{"sigma", bc.sigma}, {"gamma", bc.gamma},
                            {"L_X", bc.L_X},     {"G_X", bc.G_X},
                            {"R", bc.R},         {"C1", bc.C1},
                            {"C2", bc.C2},       {"E0", bc.E0},
                            {"D1", bc.D1},       {"D2", bc.D2},
                            {"D3", bc.D3},       {"D4", bc.D4},
                            {"D5", bc.D5},       {"D6", bc.D6}};
    const std::string summary_name = "summary_" + variant.name + ".json";
    std::ofstream js(fs::path(cfg.out) / summary_name, std::ios::binary);
    if (!js) throw RuntimeFailure("cannot write " + summary_name);
    js << summary.dump(2) << '\n';

    json ventry;
    ventry["name"] = variant.name;
    ventry["config"] = config_to_keyvalues(vc);
    ventry["traces"] = trace_files;
    ventry["summary"] = summary_name;
    manifest["variants"].push_back(ventry);
  }

  std::ofstream mf(fs::path(cfg.out) / "manifest.json", std::ios::binary);
  if (!mf) throw RuntimeFailure("cannot write manifest.json");
  mf << manifest.dump(2) << '\n';
  return 0;
}

ExperimentConfig parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest '" + path + "' cannot be opened");
  json m;
  in >> m;
  if (!m.contains("common")) throw ConfigError("manifest: missing 'common'");
  KeyValues kv;
  for (const auto& [key, value] : m["common"].items())
    kv[key] = value.get<std::string>();
  return build_config(kv);
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"simulator for quantized distributed online projection-free optimization"};
  app.require_subcommand(1);

  struct RawOptions {
    std::string config_file;
    KeyValues kv;
  };
  auto add_options = [](CLI::App* sub, RawOptions& raw) {
    auto bind = [sub, &raw](const std::string& flag, const std::string& help) {
      sub->add_option_function<std::string>(
          "--" + flag,
          [&raw, flag](const std::string& value) { raw.kv[flag] = value; },
          help);
    };
    sub->add_option("--config", raw.config_file,
                    "plain-text key = value configuration file");
    bind("preset", "fig1_levels | fig2_cap | fig3_stepsizes | fig4_agents | custom");
    bind("n", "agent count");
    bind("d", "decision dimension");
    bind("T", "horizon (rounds)");
    bind("rho", "regularization coefficient");
    bind("alpha", "step size in (0, 1]");
    bind("gamma", "step-size schedule exponent: alpha = kappa2 / T^gamma");
    bind("kappa2", "step-size schedule scale");
    bind("quantizer", "identity | probabilistic | k_level");
    bind("level-exp", "quantization level exponent p: k_t = ceil(t^p)");
    bind("level-cap", "max quantization level B, or 'none'");
    bind("resolution-kappa1", "resolution schedule scale: eps_t = kappa1 / t^xi");
    bind("resolution-xi", "resolution schedule exponent");
    bind("graph", "complete | ring | gossip_pairs | random_window");
    bind("window-Q", "joint-connectivity window length");
    bind("seeds", "seed count N (uses 1..N) or comma-separated list");
    bind("out", "output directory");
    bind("samples", "sample count for the variation estimates");
    bind("threads", "worker threads (0 = hardware)");
  };

  RawOptions run_raw, val_raw;
  CLI::App* run_cmd = app.add_subcommand("run", "execute the configured experiment");
  add_options(run_cmd, run_raw);
  CLI::App* val_cmd =
      app.add_subcommand("validate", "report assumption checks without running");
  add_options(val_cmd, val_raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto build = [](const RawOptions& raw) {
    ExperimentConfig cfg;
    if (!raw.config_file.empty())
      cfg = build_config(parse_config_file(raw.config_file), cfg);
    return build_config(raw.kv, cfg);
  };

  try {
    if (run_cmd->parsed()) {
      const ExperimentConfig cfg = build(run_raw);
      cfg.validate_values();
      return run_experiment(cfg);
    }
    const ExperimentConfig cfg = build(val_raw);
    const std::vector<Finding> findings = validate(cfg);
    bool all_ok = true;
    for (const Finding& f : findings) {
      std::cout << (f.ok ? "ok:        " : "violation: ") << f.check << " — "
                << f.detail << '\n';
      all_ok = all_ok && f.ok;
    }
    return all_ok ? 0 : 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption violation: " << e.what() << '\n';
    return 3;
  } catch (const RuntimeFailure& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace qdopfo
