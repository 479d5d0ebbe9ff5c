#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>

#include "qdopfo/rng.hpp"

namespace qdopfo {

enum class GraphKind { Complete, Ring, GossipPairs, RandomWindow };

// Time-varying sequence of doubly stochastic weight matrices. Rounds are
// generated lazily as a pure function of (seed, t); Metropolis weights on an
// undirected per-round edge set keep every W_t symmetric, hence doubly
// stochastic. Every window of Q consecutive rounds has a strongly connected
// union graph by construction.
class GraphSequence {
 public:
  GraphSequence(GraphKind kind, int n, std::uint64_t T, int Q, std::uint64_t seed);

  int n() const { return n_; }
  std::uint64_t horizon() const { return T_; }
  int window() const { return Q_; }
  std::uint64_t seed() const { return seed_; }
  GraphKind kind() const { return kind_; }
  // minimum positive weight across all rounds
  double zeta() const { return zeta_; }

  Eigen::MatrixXd weight_matrix(std::uint64_t t) const;

 private:
  GraphKind kind_;
  int n_;
  std::uint64_t T_;
  int Q_;
  std::uint64_t seed_;
  double zeta_ = 1.0;
};

GraphSequence generate_graphs(GraphKind kind, int n, std::uint64_t T, int Q,
                              std::uint64_t seed);

bool check_double_stochastic(const Eigen::MatrixXd& W, double tol);

// union of rounds kQ+1..(k+1)Q strongly connected, for every full window
bool check_joint_connectivity(const GraphSequence& seq, int Q);
bool check_joint_connectivity(
    const std::function<Eigen::MatrixXd(std::uint64_t)>& weights,
    int n, std::uint64_t T, int Q);

// ordered product W_t W_{t-1} ... W_s
Eigen::MatrixXd transition_matrix(const GraphSequence& seq, std::uint64_t t,
                                  std::uint64_t s);

struct MixingConstants {
  double sigma = 0.0;  // geometric decay rate, in (0,1)
  double gamma = 1.0;  // prefactor, > 1
};

MixingConstants mixing_constants(int n, double zeta, int Q);

// debug export: "u v weight" per line, 1-based vertex ids
void write_edge_list(const GraphSequence& seq, std::uint64_t t, std::ostream& out);

}  // namespace qdopfo
