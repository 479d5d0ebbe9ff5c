#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "qdopfo/constraint_set.hpp"
#include "qdopfo/rng.hpp"

namespace qdopfo {

// Online stream of per-agent regularized least-squares losses
//   f_{i,t}(x) = 1/2 (p_i' x - q_{i,t})^2 + rho ||x||^2.
// Features are generated once per agent from the seed; labels carry a fresh
// uniform perturbation zeta_{i,t}/(4t) each round, so the stream varies over
// time with decaying drift. Everything is a pure function of (seed, i, t):
// no storage is needed for long horizons.
class OnlineProblem {
 public:
  enum class Mode { Regression, StaticRegression, Explicit };

  static OnlineProblem regression_stream(std::uint64_t seed, int n, int d,
                                         std::uint64_t T, double rho,
                                         std::optional<Eigen::VectorXd> x0,
                                         const ConstraintSet& set);

  // freeze the stream at round 1 (time-invariant losses)
  static OnlineProblem static_stream(std::uint64_t seed, int n, int d,
                                     std::uint64_t T, double rho,
                                     std::optional<Eigen::VectorXd> x0,
                                     const ConstraintSet& set);

  // explicit per-(agent, round) data; features indexed [t-1][i], labels likewise
  static OnlineProblem explicit_data(int n, int d, std::uint64_t T, double rho,
                                     std::vector<Eigen::MatrixXd> features,
                                     std::vector<Eigen::VectorXd> labels);

  int n() const { return n_; }
  int d() const { return d_; }
  std::uint64_t horizon() const { return T_; }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::VectorXd& ground_truth() const { return x0_; }
  Mode mode() const { return mode_; }

  // agents are 1-based, rounds are 1-based
  Eigen::VectorXd features(int i, std::uint64_t t) const;
  double label(int i, std::uint64_t t) const;

  // all of round t at once: rows of the matrix are agents
  Eigen::MatrixXd round_features(std::uint64_t t) const;
  Eigen::VectorXd round_labels(std::uint64_t t) const;

  double loss_eval(int i, std::uint64_t t, const Eigen::VectorXd& x) const;
  Eigen::VectorXd loss_grad(int i, std::uint64_t t, const Eigen::VectorXd& x) const;

 private:
  OnlineProblem() = default;
  void check_args(int i, std::uint64_t t) const;

  Mode mode_ = Mode::Regression;
  int n_ = 1;
  int d_ = 1;
  std::uint64_t T_ = 1;
  double rho_ = 0.0;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd x0_;
  std::vector<Eigen::MatrixXd> explicit_features_;  // [t-1]: n x d
  std::vector<Eigen::VectorXd> explicit_labels_;    // [t-1]: n
};

// default sparse ground truth: ceil(d/10) nonzero coordinates at random
// positions, scaled so ||x0||_1 = radius / 2
Eigen::VectorXd default_ground_truth(std::uint64_t seed, int d, double radius);

struct ProblemConstants {
  double L_X = 0.0;  // Lipschitz constant of the losses on the set
  double G_X = 0.0;  // Lipschitz constant of the gradients
  enum class How { ClosedForm, Sampled } how = How::ClosedForm;
};

ProblemConstants estimate_constants(const OnlineProblem& problem,
                                    const ConstraintSet& set);
ProblemConstants estimate_constants_sampled(const OnlineProblem& problem,
                                            const ConstraintSet& set,
                                            int samples, std::uint64_t seed);

}  // namespace qdopfo
