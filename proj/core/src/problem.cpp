#include "qdopfo/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace qdopfo {

namespace {
constexpr double kFeatureHalfWidth = 5.0;
}

Eigen::VectorXd default_ground_truth(std::uint64_t seed, int d, double radius) {
  const int nnz = (d + 9) / 10;
  CounterRng rng = derive_stream(seed, StreamTag::GroundTruth);
  // distinct positions by partial Fisher-Yates
  std::vector<int> pos(d);
  for (int j = 0; j < d; ++j) pos[j] = j;
  for (int j = 0; j < nnz; ++j) {
    const int k = j + static_cast<int>(rng.uniform_int(d - j));
    std::swap(pos[j], pos[k]);
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  double l1 = 0.0;
  while (l1 == 0.0) {
    for (int j = 0; j < nnz; ++j) x0[pos[j]] = rng.uniform(-1.0, 1.0);
    l1 = x0.lpNorm<1>();
  }
  x0 *= (radius / 2.0) / l1;
  return x0;
}

OnlineProblem OnlineProblem::regression_stream(std::uint64_t seed, int n, int d,
                                               std::uint64_t T, double rho,
                                               std::optional<Eigen::VectorXd> x0,
                                               const ConstraintSet& set) {
  if (n < 1 || d < 1 || T < 1)
    throw std::invalid_argument("regression stream: n, d, T must be >= 1");
  if (rho < 0.0) throw std::invalid_argument("regression stream: rho must be >= 0");
  if (set.dim != d) throw std::invalid_argument("regression stream: set dimension mismatch");
  OnlineProblem p;
  p.mode_ = Mode::Regression;
  p.n_ = n;
  p.d_ = d;
  p.T_ = T;
  p.rho_ = rho;
  p.seed_ = seed;
  if (x0) {
    if (x0->size() != d) throw std::invalid_argument("regression stream: x0 dimension mismatch");
    if (!contains(set, *x0)) throw std::invalid_argument("regression stream: x0 not in the set");
    p.x0_ = std::move(*x0);
  } else {
    p.x0_ = default_ground_truth(seed, d, set.radius);
  }
  return p;
}

OnlineProblem OnlineProblem::static_stream(std::uint64_t seed, int n, int d,
                                           std::uint64_t T, double rho,
                                           std::optional<Eigen::VectorXd> x0,
                                           const ConstraintSet& set) {
  OnlineProblem p = regression_stream(seed, n, d, T, rho, std::move(x0), set);
  p.mode_ = Mode::StaticRegression;
  return p;
}

OnlineProblem OnlineProblem::explicit_data(int n, int d, std::uint64_t T, double rho,
                                           std::vector<Eigen::MatrixXd> features,
                                           std::vector<Eigen::VectorXd> labels) {
  if (n < 1 || d < 1 || T < 1)
    throw std::invalid_argument("explicit data: n, d, T must be >= 1");
  if (rho < 0.0) throw std::invalid_argument("explicit data: rho must be >= 0");
  if (features.size() != T || labels.size() != T)
    throw std::invalid_argument("explicit data: need one feature matrix and label vector per round");
  for (std::uint64_t t = 0; t < T; ++t) {
    if (features[t].rows() != n || features[t].cols() != d || labels[t].size() != n)
      throw std::invalid_argument("explicit data: per-round shapes must be n x d and n");
  }
  OnlineProblem p;
  p.mode_ = Mode::Explicit;
  p.n_ = n;
  p.d_ = d;
  p.T_ = T;
  p.rho_ = rho;
  p.x0_ = Eigen::VectorXd::Zero(d);
  p.explicit_features_ = std::move(features);
  p.explicit_labels_ = std::move(labels);
  return p;
}

void OnlineProblem::check_args(int i, std::uint64_t t) const {
  if (i < 1 || i > n_) throw std::invalid_argument("problem: agent id out of range");
  if (t < 1 || t > T_) throw std::invalid_argument("problem: round out of range");
}

Eigen::VectorXd OnlineProblem::features(int i, std::uint64_t t) const {
  check_args(i, t);
  if (mode_ == Mode::Explicit)
    return explicit_features_[t - 1].row(i - 1).transpose();
  CounterRng rng = derive_stream(seed_, StreamTag::Features,
                                 static_cast<std::uint64_t>(i));
  Eigen::VectorXd p(d_);
  for (int j = 0; j < d_; ++j)
    p[j] = rng.uniform(-kFeatureHalfWidth, kFeatureHalfWidth);
  return p;
}

double OnlineProblem::label(int i, std::uint64_t t) const {
  check_args(i, t);
  if (mode_ == Mode::Explicit) return explicit_labels_[t - 1][i - 1];
  const std::uint64_t teff = (mode_ == Mode::StaticRegression) ? 1 : t;
  CounterRng rng = derive_stream(seed_, StreamTag::LabelNoise,
                                 static_cast<std::uint64_t>(i), teff);
  const double zeta = rng.uniform01();
  return features(i, t).dot(x0_) + zeta / (4.0 * static_cast<double>(teff));
}

Eigen::MatrixXd OnlineProblem::round_features(std::uint64_t t) const {
  Eigen::MatrixXd P(n_, d_);
  for (int i = 1; i <= n_; ++i) P.row(i - 1) = features(i, t).transpose();
  return P;
}

Eigen::VectorXd OnlineProblem::round_labels(std::uint64_t t) const {
  Eigen::VectorXd q(n_);
  for (int i = 1; i <= n_; ++i) q[i - 1] = label(i, t);
  return q;
}

double OnlineProblem::loss_eval(int i, std::uint64_t t,
                                const Eigen::VectorXd& x) const {
  check_args(i, t);
  if (x.size() != d_) throw std::invalid_argument("loss_eval: x has wrong dimension");
  const double r = features(i, t).dot(x) - label(i, t);
  return 0.5 * r * r + rho_ * x.squaredNorm();
}

Eigen::VectorXd OnlineProblem::loss_grad(int i, std::uint64_t t,
                                         const Eigen::VectorXd& x) const {
  check_args(i, t);
  if (x.size() != d_) throw std::invalid_argument("loss_grad: x has wrong dimension");
  const Eigen::VectorXd p = features(i, t);
  const double r = p.dot(x) - label(i, t);
  return p * r + 2.0 * rho_ * x;
}

ProblemConstants estimate_constants(const OnlineProblem& problem,
                                    const ConstraintSet& set) {
  const double R = set.enclosing_radius();
  double L = 0.0, G = 0.0;
  for (int i = 1; i <= problem.n(); ++i) {
    Eigen::VectorXd p = problem.features(i, 1);
    double pn = p.norm();
    for (std::uint64_t t = 1; t <= problem.horizon(); ++t) {
      if (problem.mode() == OnlineProblem::Mode::Explicit) {
        p = problem.features(i, t);
        pn = p.norm();
      }
      const double q = problem.label(i, t);
      L = std::max(L, pn * (pn * R + std::abs(q)) + 2.0 * problem.rho() * R);
      G = std::max(G, pn * pn + 2.0 * problem.rho());
    }
  }
  return ProblemConstants{L, G, ProblemConstants::How::ClosedForm};
}

ProblemConstants estimate_constants_sampled(const OnlineProblem& problem,
                                            const ConstraintSet& set,
                                            int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("estimate_constants_sampled: samples >= 1");
  CounterRng rng = derive_stream(seed, StreamTag::Generic);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(samples);
  for (int s = 0; s < samples; ++s) pts.push_back(sample_point(set, rng));
  double L = 0.0, G = 0.0;
  // outside explicit mode the gradient depends on t only through the decaying
  // label noise, so round 1 dominates
  const std::uint64_t t_max =
      problem.mode() == OnlineProblem::Mode::Explicit ? problem.horizon() : 1;
  for (int i = 1; i <= problem.n(); ++i) {
    for (std::uint64_t t = 1; t <= t_max; ++t) {
      const Eigen::VectorXd p = problem.features(i, t);
      G = std::max(G, p.squaredNorm() + 2.0 * problem.rho());
      for (const auto& x : pts)
        L = std::max(L, problem.loss_grad(i, t, x).norm());
    }
  }
  return ProblemConstants{L, G, ProblemConstants::How::Sampled};
}

}  // namespace qdopfo
