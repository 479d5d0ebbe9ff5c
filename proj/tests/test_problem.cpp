#include <doctest.h>

#include <cmath>

#include "qdopfo/problem.hpp"
#include "test_util.hpp"

using namespace qdopfo;
using testutil::single_round_problem;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}
}  // namespace

TEST_CASE("loss evaluation on hand instances") {
  const OnlineProblem p1 = single_round_problem({vec({1, 0})}, {1.0}, 0.0);
  CHECK(p1.loss_eval(1, 1, vec({2, 0})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p1.loss_eval(1, 1, vec({1, 0})) == 0.0);
  const OnlineProblem p2 = single_round_problem({vec({1, 1})}, {0.0}, 0.5);
  CHECK(p2.loss_eval(1, 1, vec({1, -1})) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gradient on hand instances") {
  const OnlineProblem p1 = single_round_problem({vec({1, 0})}, {1.0}, 0.0);
  CHECK(p1.loss_grad(1, 1, vec({2, 0})) == vec({1, 0}));
  // exact fit with no regularizer: zero gradient
  const OnlineProblem p2 = single_round_problem({vec({3, -2})}, {4.0}, 0.0);
  const Eigen::VectorXd x = vec({2, 1});  // 3*2 - 2*1 = 4
  CHECK(p2.loss_grad(1, 1, x) == vec({0, 0}));
  const OnlineProblem p3 = single_round_problem({vec({2, 0})}, {0.0}, 0.5);
  CHECK(p3.loss_grad(1, 1, vec({1, 1})) == vec({5, 1}));
}

TEST_CASE("gradient matches central finite differences") {
  const ConstraintSet set = make_l1_ball(6, 2.0);
  const OnlineProblem problem =
      OnlineProblem::regression_stream(33, 3, 6, 5, 0.01, std::nullopt, set);
  CounterRng rng = derive_stream(34, StreamTag::Generic);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const int i = 1 + static_cast<int>(rng.uniform_int(3));
    const std::uint64_t t = 1 + rng.uniform_int(5);
    const Eigen::VectorXd x = sample_point(set, rng);
    const Eigen::VectorXd g = problem.loss_grad(i, t, x);
    const Eigen::VectorXd fd = testutil::fd_gradient(problem, i, t, x);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("losses are convex along random segments") {
  const ConstraintSet set = make_l1_ball(5, 2.0);
  const OnlineProblem problem =
      OnlineProblem::regression_stream(35, 2, 5, 3, 0.3, std::nullopt, set);
  CounterRng rng = derive_stream(36, StreamTag::Generic);
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd x = sample_point(set, rng);
    const Eigen::VectorXd y = sample_point(set, rng);
    const double lam = rng.uniform01();
    const int i = 1 + static_cast<int>(rng.uniform_int(2));
    const std::uint64_t t = 1 + rng.uniform_int(3);
    const double lhs = problem.loss_eval(i, t, lam * x + (1 - lam) * y);
    const double rhs =
        lam * problem.loss_eval(i, t, x) + (1 - lam) * problem.loss_eval(i, t, y);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("regression stream is deterministic in the seed") {
  const ConstraintSet set = make_l1_ball(4, 2.0);
  const OnlineProblem a =
      OnlineProblem::regression_stream(7, 1, 2, 1, 0.0, std::nullopt, make_l1_ball(2, 2.0));
  const OnlineProblem b =
      OnlineProblem::regression_stream(7, 1, 2, 1, 0.0, std::nullopt, make_l1_ball(2, 2.0));
  CHECK(a.features(1, 1) == b.features(1, 1));
  CHECK(a.label(1, 1) == b.label(1, 1));
  CHECK(a.ground_truth() == b.ground_truth());

  const OnlineProblem c =
      OnlineProblem::regression_stream(8, 1, 2, 1, 0.0, std::nullopt, make_l1_ball(2, 2.0));
  CHECK(a.features(1, 1) != c.features(1, 1));
  (void)set;
}

TEST_CASE("stream bounds: features in [-5,5], labels within the decaying noise band") {
  const ConstraintSet set = make_l1_ball(12, 2.0);
  const OnlineProblem problem =
      OnlineProblem::regression_stream(41, 4, 12, 50, 1e-4, std::nullopt, set);
  for (int i = 1; i <= 4; ++i) {
    const Eigen::VectorXd p = problem.features(i, 1);
    CHECK(p.cwiseAbs().maxCoeff() <= 5.0);
    for (std::uint64_t t = 1; t <= 50; ++t) {
      const double q = problem.label(i, t);
      CHECK(std::abs(q - p.dot(problem.ground_truth())) <= 1.0 / (4.0 * t) + 1e-15);
    }
  }
}

TEST_CASE("default ground truth is sparse, interior, and half the radius in l1 norm") {
  for (const int d : {5, 10, 30, 95}) {
    const Eigen::VectorXd x0 = default_ground_truth(123, d, 2.0);
    CHECK(x0.lpNorm<1>() == doctest::Approx(1.0).epsilon(1e-12));
    int nnz = 0;
    for (int j = 0; j < d; ++j) nnz += x0[j] != 0.0 ? 1 : 0;
    CHECK(nnz <= (d + 9) / 10);
    CHECK(nnz >= 1);
  }
}

TEST_CASE("static stream freezes the round-1 losses") {
  const ConstraintSet set = make_l1_ball(6, 2.0);
  const OnlineProblem p =
      OnlineProblem::static_stream(9, 3, 6, 20, 1e-3, std::nullopt, set);
  for (int i = 1; i <= 3; ++i) {
    for (std::uint64_t t = 2; t <= 20; ++t) {
      CHECK(p.features(i, t) == p.features(i, 1));
      CHECK(p.label(i, t) == p.label(i, 1));
    }
  }
}

TEST_CASE("argument validation") {
  const ConstraintSet set = make_l1_ball(3, 2.0);
  const OnlineProblem p =
      OnlineProblem::regression_stream(1, 2, 3, 4, 0.0, std::nullopt, set);
  CHECK_THROWS_AS((void)p.loss_eval(0, 1, vec({0, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS((void)p.loss_eval(3, 1, vec({0, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS((void)p.loss_eval(1, 0, vec({0, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS((void)p.loss_eval(1, 5, vec({0, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS((void)p.loss_grad(1, 1, vec({0, 0})), std::invalid_argument);
  CHECK_THROWS_AS(
      OnlineProblem::regression_stream(1, 0, 3, 4, 0.0, std::nullopt, set),
      std::invalid_argument);
  CHECK_THROWS_AS(
      OnlineProblem::regression_stream(1, 2, 3, 4, -0.1, std::nullopt, set),
      std::invalid_argument);
}

TEST_CASE("closed-form constants on hand instances") {
  const ConstraintSet set = make_l1_ball(2, 2.0);
  const OnlineProblem p1 = single_round_problem({vec({1, 0})}, {0.0}, 0.0);
  const ProblemConstants c1 = estimate_constants(p1, set);
  CHECK(c1.G_X == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c1.L_X == doctest::Approx(2.0).epsilon(1e-15));  // ||p||(||p|| R + |q|)

  const OnlineProblem p0 = single_round_problem({vec({0, 0})}, {0.0}, 0.0);
  const ProblemConstants c0 = estimate_constants(p0, set);
  CHECK(c0.L_X == 0.0);
  CHECK(c0.G_X == 0.0);
}

TEST_CASE("sampled constants never exceed the closed form") {
  const ConstraintSet set = make_l1_ball(8, 2.0);
  const OnlineProblem problem =
      OnlineProblem::regression_stream(55, 4, 8, 10, 1e-3, std::nullopt, set);
  const ProblemConstants closed = estimate_constants(problem, set);
  const ProblemConstants sampled =
      estimate_constants_sampled(problem, set, 256, 77);
  CHECK(sampled.L_X <= closed.L_X);
  CHECK(sampled.G_X <= closed.G_X);
  CHECK(sampled.L_X > 0.0);
  // the closed form truly dominates gradient norms at feasible points
  CounterRng rng = derive_stream(78, StreamTag::Generic);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = sample_point(set, rng);
    const int i = 1 + static_cast<int>(rng.uniform_int(4));
    CHECK(problem.loss_grad(i, 1, x).norm() <= closed.L_X + 1e-12);
  }
}

TEST_CASE("round materialization matches the per-agent API") {
  const ConstraintSet set = make_l1_ball(5, 2.0);
  const OnlineProblem p =
      OnlineProblem::regression_stream(66, 3, 5, 4, 0.0, std::nullopt, set);
  const Eigen::MatrixXd P = p.round_features(2);
  const Eigen::VectorXd q = p.round_labels(2);
  for (int i = 1; i <= 3; ++i) {
    CHECK(P.row(i - 1).transpose() == p.features(i, 2));
    CHECK(q[i - 1] == p.label(i, 2));
  }
}
