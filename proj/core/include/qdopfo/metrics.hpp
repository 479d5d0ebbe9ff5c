#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qdopfo/constraint_set.hpp"
#include "qdopfo/engine.hpp"
#include "qdopfo/graph.hpp"
#include "qdopfo/problem.hpp"
#include "qdopfo/quantizer.hpp"

namespace qdopfo {

struct ComparatorResult {
  Eigen::VectorXd x;     // per-round minimizer x_t*
  double gap = 0.0;      // certified linear-oracle gap at x
  double value = 0.0;    // F_t(x_t*)
  int iterations = 0;    // conditional-gradient iterations spent
};

// Per-round minimizer of F_t over the set with a certified gap
//   max_{v in X} <grad F_t(x_t*), x_t* - v> <= tol.
// Interior optima are solved directly from the normal equations; boundary
// optima get a conditional-gradient warm-up plus an active-set polish.
// Throws RuntimeFailure (reporting the achieved gap) if the certificate
// cannot be met within the iteration cap.
ComparatorResult comparator(const OnlineProblem& problem,
                            const ConstraintSet& set, std::uint64_t t,
                            double tol = 1e-8, int cap = 100000);

struct ComparatorSet {
  std::vector<double> value;  // F_t(x_t*) for t = 1..T
  std::vector<double> gap;    // certificates
};

ComparatorSet solve_comparators(const OnlineProblem& problem,
                                const ConstraintSet& set, double tol = 1e-8,
                                int cap = 100000, int threads = 0);

// partial sums over s <= t of F_s(x_{j,s}) - F_s(x_s*), agent j is 1-based
Eigen::VectorXd dynamic_regret(const Trace& trace, const OnlineProblem& problem,
                               int j, const ComparatorSet& comparators);

struct Variations {
  double H_T = 0.0;  // cumulative function variation
  double D_T = 0.0;  // cumulative gradient variation
  bool exact = false;  // true when not limited by sampling
};

// suprema over the set are estimated on a deterministic low-discrepancy
// sample (plus the set's vertices); the result is a lower bound in general
Variations variations(const OnlineProblem& problem, const ConstraintSet& set,
                      int samples = 4096);

struct BoundInputs {
  int n = 1;
  double R = 1.0;
  double L_X = 1.0;
  double G_X = 1.0;
  double sigma = 0.5;
  double gamma = 1.0;
  double eps1 = 0.0;             // quantizer resolution at round 1
  double init_state_norm = 0.0;  // sum_i ||x_{i,1}||
  double init_dispersion = 0.0;  // sum_i ||x_{i,1} - x_avg_1||
  double init_grad_norm = 0.0;   // sum_i ||grad f_{i,1}(xhat_{i,1})||
};

struct BoundConstants {
  double D1 = 0, D2 = 0, D3 = 0, D4 = 0, D5 = 0, D6 = 0;
  double C1 = 0, C2 = 0, E0 = 0;
  double sigma = 0, gamma = 0, L_X = 0, G_X = 0, R = 0;
  int n = 0;
};

BoundConstants bound_constants(const BoundInputs& in);

// regret bound: D1 + D2 a T + D3 sum sqrt(eps_t) + D4/a + (D5/a) sum eps_t
//               + (2n/a) H_T + D6 D_T
double theorem1_bound(const BoundConstants& bc, double alpha, std::uint64_t T,
                      const std::vector<double>& eps_series, double H_T,
                      double D_T);

enum class RegimeCase {
  BelowOne,  // gamma < xi < 1
  EqualOne,  // xi = 1
  AboveOne,  // xi > 1
};

struct RegimeInfo {
  RegimeCase label;
  std::optional<double> b;   // min{gamma, xi/2, xi - gamma}, first case only
  double dominant_exponent;  // T-exponent of the variation-free part
  bool log_factor;           // dominant term carries a ln T factor
};

RegimeInfo corollary1_regime(double gamma, double xi);

struct OptimalGamma {
  double gamma;
  std::string regret_order;  // resulting order, as metadata
};

// gamma = 1/2 - log_T sqrt(1 + T^theta), valid while positive
OptimalGamma optimal_gamma(double theta, std::uint64_t T);

struct ReportOptions {
  double comparator_tol = 1e-8;
  int comparator_cap = 100000;
  int variation_samples = 4096;
  bool compute_variations = true;
  bool compute_bound = true;
  int threads = 0;
};

struct RegretReport {
  int n = 0;
  std::uint64_t T = 0;
  std::vector<Eigen::VectorXd> regret;  // one series per agent
  Eigen::VectorXd global_avg;           // (1/n) sum_j regret_j(t) / t
  double H_T = std::numeric_limits<double>::quiet_NaN();
  double D_T = std::numeric_limits<double>::quiet_NaN();
  bool variations_exact = false;
  std::uint64_t total_bits = 0;
  std::vector<double> comparator_gap;
  std::vector<double> comparator_value;
  BoundConstants constants;
  double bound_value = std::numeric_limits<double>::quiet_NaN();

  double final_global_avg() const { return global_avg[global_avg.size() - 1]; }
};

RegretReport make_report(const Trace& trace, const OnlineProblem& problem,
                         const ConstraintSet& set, const GraphSequence& graphs,
                         const QuantizerSpec& state_quantizer, double alpha,
                         const ReportOptions& options = {},
                         const ComparatorSet* shared_comparators = nullptr,
                         const ProblemConstants* shared_constants = nullptr,
                         const Variations* shared_variations = nullptr);

}  // namespace qdopfo
