#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qdopfo/constraint_set.hpp"
#include "qdopfo/graph.hpp"
#include "qdopfo/problem.hpp"
#include "qdopfo/quantizer.hpp"

namespace qdopfo {

struct RunConfig {
  const OnlineProblem* problem = nullptr;
  const GraphSequence* graphs = nullptr;
  const ConstraintSet* set = nullptr;
  QuantizerSpec state_quantizer;
  QuantizerSpec grad_quantizer;
  double alpha = 0.1;  // 0 < alpha <= 1
  // empty: all agents start at the origin
  std::vector<Eigen::VectorXd> initial_decisions;
  std::uint64_t seed = 0;
  bool record_decisions = false;  // keep x_{i,t} and xhat_{i,t} vectors
  bool record_tracking = false;   // keep tracked and quantized gradients
};

// step size alpha = kappa2 / T^gamma; requires kappa2 <= T^gamma
double alpha_from_schedule(double kappa2, double gamma, std::uint64_t T);

struct Trace {
  int n = 0;
  int d = 0;
  std::uint64_t T = 0;

  // per (t, i), flattened as (t-1)*n + (i-1)
  std::vector<double> own_loss;      // f_{i,t}(x_{i,t})
  std::vector<double> global_loss;   // F_t(x_{i,t}), summed over all agents
  std::vector<std::uint64_t> bits;   // state + gradient message bits
  std::vector<char> fallback;        // exact state fallback triggered
  std::vector<double> state_err_sq;  // ||transmitted - x_{i,t}||^2

  // per t
  std::vector<double> consensus_err;    // sum_i ||xhat_{i,t} - x_avg_t||
  std::vector<double> tracking_err;     // sum_i ||s_{i,t} - (1/n) grad F_t(x_avg_t)||
  std::vector<Eigen::VectorXd> x_avg;
  std::vector<Eigen::VectorXd> v_avg;
  std::vector<Eigen::VectorXd> e_mean;  // (1/n) sum_i e_{i,t}

  // round-1 sums feeding the regret-bound constants
  double init_dispersion = 0.0;  // sum_i ||x_{i,1} - x_avg_1||
  double init_state_norm = 0.0;  // sum_i ||x_{i,1}||
  double init_grad_norm = 0.0;   // sum_i ||grad f_{i,1}(xhat_{i,1})||

  // optional per (t, i) vectors, same flattened indexing
  std::vector<Eigen::VectorXd> decisions;  // x_{i,t}
  std::vector<Eigen::VectorXd> consensus;  // xhat_{i,t}
  std::vector<Eigen::VectorXd> gbar;       // tracked gradient before mixing
  std::vector<Eigen::VectorXd> qgrad;      // quantized local gradient

  std::uint64_t total_bits() const;
  std::size_t at(std::uint64_t t, int i) const {
    return static_cast<std::size_t>(t - 1) * n + (i - 1);
  }
};

bool traces_bit_identical(const Trace& a, const Trace& b);

// Synchronous round executor: quantize-all (with the exact feasibility
// fallback), mix-all, gradient-all, track-all, update-all.
class Engine {
 public:
  explicit Engine(const RunConfig& config);

  // executes round `round()`; all agents advance together
  void step();
  std::uint64_t round() const { return t_; }
  bool done() const { return t_ > T_; }

  const std::vector<Eigen::VectorXd>& decisions() const { return x_; }
  const std::vector<Eigen::VectorXd>& tracked_gradients() const { return s_; }
  Trace take_trace() { return std::move(trace_); }

 private:
  RunConfig cfg_;
  std::uint64_t T_;
  int n_, d_;
  std::uint64_t t_ = 1;
  std::vector<Eigen::VectorXd> x_, s_, last_qgrad_;
  std::vector<Eigen::VectorXd> feats_;  // cached per-agent features
  bool feats_fixed_ = false;
  Trace trace_;
};

Trace run(const RunConfig& config);

}  // namespace qdopfo
