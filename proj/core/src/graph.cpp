#include "qdopfo/graph.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdopfo/errors.hpp"

namespace qdopfo {

namespace {

using EdgeList = std::vector<std::pair<int, int>>;

// undirected edges for round t of the given kind
EdgeList round_edges(GraphKind kind, int n, int Q, std::uint64_t seed,
                     std::uint64_t t) {
  EdgeList edges;
  switch (kind) {
    case GraphKind::Complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphKind::Ring:
      if (n == 2) {
        edges.emplace_back(0, 1);
      } else if (n > 2) {
        for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      }
      break;
    case GraphKind::GossipPairs: {
      // one pair per round; each window first walks a random spanning tree so
      // the window union is connected, then gossips random pairs
      const std::uint64_t k = (t - 1) / static_cast<std::uint64_t>(Q);
      const std::uint64_t pos = (t - 1) % static_cast<std::uint64_t>(Q);
      CounterRng rng = derive_stream(seed, StreamTag::GraphTopology, k);
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(perm[i], perm[j]);
      }
      std::vector<std::pair<int, int>> tree;
      for (int i = 1; i < n; ++i) {
        const int attach = static_cast<int>(rng.uniform_int(i));
        tree.emplace_back(perm[i], perm[attach]);
      }
      if (pos < tree.size()) {
        edges.push_back(tree[pos]);
      } else {
        CounterRng prng = derive_stream(seed, StreamTag::GraphTopology, k,
                                        1000 + pos);
        const int a = static_cast<int>(prng.uniform_int(n));
        int b = static_cast<int>(prng.uniform_int(n - 1));
        if (b >= a) ++b;
        edges.emplace_back(a, b);
      }
      break;
    }
    case GraphKind::RandomWindow: {
      // random spanning tree plus a sprinkle of extra edges each round
      CounterRng rng = derive_stream(seed, StreamTag::GraphTopology, t);
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(perm[i], perm[j]);
      }
      for (int i = 1; i < n; ++i) {
        const int attach = static_cast<int>(rng.uniform_int(i));
        edges.emplace_back(perm[i], perm[attach]);
      }
      const double p_extra = n > 1 ? 2.0 / n : 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (rng.uniform01() < p_extra) edges.emplace_back(i, j);
        }
      }
      break;
    }
  }
  return edges;
}

Eigen::MatrixXd metropolis(int n, const EdgeList& edges) {
  std::vector<int> deg(n, 0);
  for (const auto& [a, b] : edges) {
    if (a != b) {
      ++deg[a];
      ++deg[b];
    }
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    const double w = 1.0 / (1.0 + std::max(deg[a], deg[b]));
    W(a, b) = w;
    W(b, a) = w;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += W(i, j);
    W(i, i) = 1.0 - off;
  }
  return W;
}

bool strongly_connected(const std::vector<std::vector<int>>& adj, int n) {
  if (n <= 1) return true;
  // forward reachability from 0
  auto bfs = [&](const std::vector<std::vector<int>>& g) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : g[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  if (!bfs(adj)) return false;
  std::vector<std::vector<int>> rev(n);
  for (int u = 0; u < n; ++u)
    for (int v : adj[u]) rev[v].push_back(u);
  return bfs(rev);
}

}  // namespace

GraphSequence::GraphSequence(GraphKind kind, int n, std::uint64_t T, int Q,
                             std::uint64_t seed)
    : kind_(kind), n_(n), T_(T), Q_(Q), seed_(seed) {
  if (n < 1) throw AssumptionError("graph sequence: n must be >= 1");
  if (Q < 1) throw AssumptionError("graph sequence: window Q must be >= 1");
  if (T < 1) throw AssumptionError("graph sequence: horizon must be >= 1");
  if (kind == GraphKind::GossipPairs) {
    if (n < 2)
      throw AssumptionError(
          "graph sequence: gossip_pairs needs n >= 2 (no pairs exist)");
    if (Q < n - 1)
      throw AssumptionError(
          "graph sequence: gossip_pairs with Q < n-1 cannot make a window union "
          "strongly connected (joint-connectivity check would fail)");
  }
  // scan: min positive weight, double stochasticity, window connectivity
  double zeta = 1.0;
  for (std::uint64_t t = 1; t <= T_; ++t) {
    const Eigen::MatrixXd W = weight_matrix(t);
    if (!check_double_stochastic(W, 1e-12))
      throw AssumptionError("graph sequence: round " + std::to_string(t) +
                            " weights are not doubly stochastic (check_double_stochastic)");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (W(i, j) > 0.0) zeta = std::min(zeta, W(i, j));
  }
  zeta_ = zeta;
  if (!check_joint_connectivity(*this, Q_))
    throw AssumptionError(
        "graph sequence: a window union is not strongly connected "
        "(check_joint_connectivity)");
}

Eigen::MatrixXd GraphSequence::weight_matrix(std::uint64_t t) const {
  if (t < 1 || t > T_)
    throw std::invalid_argument("weight_matrix: round out of range");
  return metropolis(n_, round_edges(kind_, n_, Q_, seed_, t));
}

GraphSequence generate_graphs(GraphKind kind, int n, std::uint64_t T, int Q,
                              std::uint64_t seed) {
  return GraphSequence(kind, n, T, Q, seed);
}

bool check_double_stochastic(const Eigen::MatrixXd& W, double tol) {
  if (W.rows() != W.cols()) return false;
  const int n = static_cast<int>(W.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (W(i, j) < 0.0) return false;
  for (int i = 0; i < n; ++i) {
    if (std::abs(W.row(i).sum() - 1.0) > tol) return false;
    if (std::abs(W.col(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

bool check_joint_connectivity(
    const std::function<Eigen::MatrixXd(std::uint64_t)>& weights,
    int n, std::uint64_t T, int Q) {
  if (Q < 1) throw std::invalid_argument("check_joint_connectivity: Q >= 1");
  for (std::uint64_t start = 1; start + Q - 1 <= T; start += Q) {
    std::vector<std::vector<int>> adj(n);
    Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(n, n);
    for (std::uint64_t t = start; t < start + Q; ++t) {
      const Eigen::MatrixXd W = weights(t);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i != j && W(i, j) > 0.0 && seen(i, j) == 0.0) {
            seen(i, j) = 1.0;
            adj[j].push_back(i);  // positive W(i,j): j sends to i
          }
        }
      }
    }
    if (!strongly_connected(adj, n)) return false;
  }
  return true;
}

bool check_joint_connectivity(const GraphSequence& seq, int Q) {
  return check_joint_connectivity(
      [&seq](std::uint64_t t) { return seq.weight_matrix(t); }, seq.n(),
      seq.horizon(), Q);
}

Eigen::MatrixXd transition_matrix(const GraphSequence& seq, std::uint64_t t,
                                  std::uint64_t s) {
  if (t < s) throw std::invalid_argument("transition_matrix: need t >= s");
  Eigen::MatrixXd phi = seq.weight_matrix(s);
  for (std::uint64_t r = s + 1; r <= t; ++r)
    phi = (seq.weight_matrix(r) * phi).eval();
  return phi;
}

MixingConstants mixing_constants(int n, double zeta, int Q) {
  if (n < 1) throw std::invalid_argument("mixing_constants: n >= 1");
  if (Q < 1) throw std::invalid_argument("mixing_constants: Q >= 1");
  if (!(zeta > 0.0 && zeta <= 1.0))
    throw std::invalid_argument("mixing_constants: zeta in (0, 1]");
  const double base = 1.0 - zeta / (4.0 * n * n);
  MixingConstants mc;
  mc.sigma = std::pow(base, 1.0 / Q);
  mc.gamma = std::pow(base, (1.0 - 2.0 * Q) / Q);
  return mc;
}

void write_edge_list(const GraphSequence& seq, std::uint64_t t,
                     std::ostream& out) {
  const Eigen::MatrixXd W = seq.weight_matrix(t);
  for (int i = 0; i < seq.n(); ++i)
    for (int j = 0; j < seq.n(); ++j)
      if (i != j && W(i, j) > 0.0)
        out << (i + 1) << ' ' << (j + 1) << ' ' << W(i, j) << '\n';
}

}  // namespace qdopfo
