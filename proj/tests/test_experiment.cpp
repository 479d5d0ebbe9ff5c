#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdopfo/errors.hpp"
#include "qdopfo/experiment.hpp"
#include "qdopfo/report.hpp"

using namespace qdopfo;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("keys parse with flag semantics and unknown keys are named") {
  ExperimentConfig cfg = build_config({{"n", "4"},
                                       {"T", "100"},
                                       {"rho", "0.25"},
                                       {"quantizer", "identity"},
                                       {"seeds", "3"},
                                       {"level-cap", "80"}});
  CHECK(cfg.n == 4);
  CHECK(cfg.T == 100);
  CHECK(cfg.rho == 0.25);
  CHECK(cfg.quantizer == "identity");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.level_cap == 80);
  CHECK(build_config({{"seeds", "9,4,9"}}).seeds ==
        std::vector<std::uint64_t>{9, 4, 9});
  CHECK_THROWS_WITH_AS(build_config({{"horizon", "10"}}),
                       doctest::Contains("horizon"), ConfigError);
  CHECK_THROWS_WITH_AS(build_config({{"T", "ten"}}), doctest::Contains("T"),
                       ConfigError);
}

TEST_CASE("config file parsing with comments, and flags override the file") {
  const fs::path file = fs::temp_directory_path() / "qdopfo_cfg_test.cfg";
  {
    std::ofstream out(file);
    out << "# experiment setup\n"
        << "n = 6\n"
        << "T = 40   # short\n"
        << "graph = ring\n";
  }
  const ExperimentConfig base = build_config(parse_config_file(file.string()));
  CHECK(base.n == 6);
  CHECK(base.T == 40);
  CHECK(base.graph == "ring");
  const ExperimentConfig over = build_config({{"n", "9"}}, base);
  CHECK(over.n == 9);
  CHECK(over.T == 40);
  fs::remove(file);
}

TEST_CASE("value validation names the offending key") {
  ExperimentConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate_values(), doctest::Contains("0 < α ≤ 1"),
                       ConfigError);
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate_values(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.rho = -1.0;
  CHECK_THROWS_WITH_AS(cfg.validate_values(), doctest::Contains("rho"),
                       ConfigError);
  cfg = ExperimentConfig{};
  cfg.kappa2 = 5.0;
  CHECK_THROWS_AS(cfg.validate_values(), ConfigError);  // gamma missing
  cfg.gamma = 0.3;
  cfg.T = 2;
  CHECK_THROWS_AS(cfg.validate_values(), ConfigError);  // kappa2 > T^gamma
}

TEST_CASE("default step size follows the horizon") {
  ExperimentConfig cfg;
  cfg.T = 2000;
  CHECK(cfg.effective_alpha() ==
        doctest::Approx(1.0 / (2.0 * std::pow(2000.0, 0.3))).epsilon(1e-15));
  cfg.kappa2 = 0.5;
  cfg.gamma = 0.3;
  CHECK(cfg.effective_alpha() == doctest::Approx(0.5 / std::pow(2000.0, 0.3)));
  cfg = ExperimentConfig{};
  cfg.alpha = 0.125;
  CHECK(cfg.effective_alpha() == 0.125);
}

TEST_CASE("preset variant expansion") {
  ExperimentConfig cfg;
  cfg.preset = "fig1_levels";
  CHECK(expand_variants(cfg).size() == 5);
  cfg.preset = "fig2_cap";
  const auto fig2 = expand_variants(cfg);
  CHECK(fig2.size() == 4);
  CHECK(fig2[0].cfg.level_cap == 50);
  CHECK_FALSE(fig2[3].cfg.level_cap.has_value());
  cfg.preset = "fig3_stepsizes";
  const auto fig3 = expand_variants(cfg);
  CHECK(fig3.size() == 5);
  CHECK(fig3[1].cfg.alpha == 0.2);
  cfg.preset = "fig4_agents";
  const auto fig4 = expand_variants(cfg);
  CHECK(fig4.size() == 3);
  CHECK(fig4[2].cfg.n == 50);
  cfg.preset = "custom";
  CHECK(expand_variants(cfg).size() == 1);
}

TEST_CASE("per-variant quantizer streams never coincide") {
  const std::uint64_t seed = 7;
  CHECK(engine_seed(seed, "identity") != engine_seed(seed, "levels_p1.5"));
  CHECK(engine_seed(seed, "levels_p1.5") != engine_seed(seed, "levels_p1.3"));
  CHECK(engine_seed(1, "identity") != engine_seed(2, "identity"));
}

TEST_CASE("validate reports per-assumption findings") {
  ExperimentConfig cfg;
  cfg.T = 30;
  cfg.n = 4;
  cfg.d = 6;
  cfg.seeds = {1};
  const auto findings = validate(cfg);
  REQUIRE(findings.size() >= 5);
  for (const auto& f : findings) CHECK(f.ok);

  cfg.rho = -0.5;
  const auto bad = validate(cfg);
  bool problem_flagged = false;
  for (const auto& f : bad)
    if (f.check == "problem-validity" && !f.ok) problem_flagged = true;
  CHECK(problem_flagged);
}

TEST_CASE("an isolated node is reported as a connectivity violation") {
  // node 2 never communicates
  auto weights = [](std::uint64_t) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
    W(0, 0) = 0.5;
    W(0, 1) = 0.5;
    W(1, 0) = 0.5;
    W(1, 1) = 0.5;
    W(2, 2) = 1.0;
    return W;
  };
  const ConstraintSet set = make_l1_ball(2, 2.0);
  const auto findings = validate_assumptions(weights, 3, 8, 2, set, nullptr);
  bool conn_violation = false;
  for (const auto& f : findings)
    if (f.check.find("assumption-1") != std::string::npos && !f.ok)
      conn_violation = true;
  CHECK(conn_violation);
}

TEST_CASE("experiment outputs: file counts, determinism, manifest round-trip") {
  const fs::path dir = fresh_dir("qdopfo_exp_test");
  ExperimentConfig cfg;
  cfg.preset = "fig1_levels";
  cfg.T = 40;
  cfg.d = 6;
  cfg.n = 4;
  cfg.seeds = {1, 2};
  cfg.samples = 128;
  cfg.threads = 1;
  cfg.out = dir.string();
  REQUIRE(run_experiment(cfg) == 0);

  int traces = 0, summaries = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0) ++traces;
    if (name.rfind("summary_", 0) == 0) ++summaries;
  }
  CHECK(traces == 10);  // 5 variants x 2 seeds
  CHECK(summaries == 5);
  CHECK(fs::exists(dir / "manifest.json"));

  // identical invocation reproduces identical bytes
  const std::string before =
      read_file(dir / "trace_identity_seed1.csv") +
      read_file(dir / "summary_identity.json") + read_file(dir / "manifest.json");
  REQUIRE(run_experiment(cfg) == 0);
  const std::string after =
      read_file(dir / "trace_identity_seed1.csv") +
      read_file(dir / "summary_identity.json") + read_file(dir / "manifest.json");
  CHECK(before == after);

  // the manifest reconstructs the effective configuration
  const ExperimentConfig parsed = parse_manifest((dir / "manifest.json").string());
  CHECK(parsed == cfg);

  // trace CSV carries the fixed column order
  std::ifstream csv(dir / "trace_identity_seed1.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "t,agent,loss,regret_partial,bits_cumulative,consensus_err,tracking_err");
  std::string row;
  std::getline(csv, row);
  int commas = 0;
  for (char c : row) commas += c == ',' ? 1 : 0;
  CHECK(commas == 6);
  fs::remove_all(dir);
}

TEST_CASE("cli entry point maps errors to exit codes") {
  const fs::path dir = fresh_dir("qdopfo_cli_test");
  const std::string out = dir.string();
  {
    const char* argv[] = {"qdopfo", "run", "--preset", "custom", "--alpha", "0",
                          "--out", out.c_str()};
    CHECK(cli_main(8, argv) == 2);
  }
  {
    const char* argv[] = {"qdopfo", "run", "--preset", "nope", "--out", out.c_str()};
    CHECK(cli_main(6, argv) == 2);
  }
  {
    const char* argv[] = {"qdopfo", "run",     "--T",   "30",  "--n",
                          "3",      "--d",     "4",     "--seeds", "1",
                          "--samples", "64",   "--out", out.c_str()};
    CHECK(cli_main(14, argv) == 0);
    CHECK(fs::exists(dir / "manifest.json"));
  }
  {
    const char* argv[] = {"qdopfo", "validate", "--T", "20", "--n", "3",
                          "--d", "4", "--seeds", "1"};
    CHECK(cli_main(10, argv) == 0);
  }
  {
    // gossip_pairs with a window too short to connect: assumption violation
    const char* argv[] = {"qdopfo",  "run",   "--T",       "20",
                          "--n",     "6",     "--d",       "4",
                          "--seeds", "1",     "--graph",   "gossip_pairs",
                          "--window-Q", "2",  "--samples", "64",
                          "--out",   out.c_str()};
    CHECK(cli_main(16, argv) == 3);
  }
  fs::remove_all(dir);
}
