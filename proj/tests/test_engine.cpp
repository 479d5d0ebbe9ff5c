#include <doctest.h>

#include <cmath>

#include "qdopfo/engine.hpp"
#include "qdopfo/errors.hpp"
#include "test_util.hpp"

using namespace qdopfo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

QuantizerSpec identity_spec(double range = 2.0) {
  QuantizerSpec spec;
  spec.kind = QuantizerKind::Identity;
  spec.value_range = range;
  return spec;
}

QuantizerSpec probabilistic_spec(double p, double range,
                                 std::optional<std::uint64_t> cap = {}) {
  QuantizerSpec spec;
  spec.kind = QuantizerKind::Probabilistic;
  spec.schedule = LevelSchedule::power(p);
  spec.value_range = range;
  spec.cap = cap;
  return spec;
}

struct Fixture {
  ConstraintSet set;
  OnlineProblem problem;
  GraphSequence graphs;

  Fixture(int n, int d, std::uint64_t T, std::uint64_t seed,
          GraphKind kind = GraphKind::RandomWindow, int Q = 5)
      : set(make_l1_ball(d, 2.0)),
        problem(OnlineProblem::regression_stream(seed, n, d, T, 5e-6,
                                                 std::nullopt, set)),
        graphs(generate_graphs(kind, n, T, Q, seed + 1000)) {}

  RunConfig config(const QuantizerSpec& sq, const QuantizerSpec& gq,
                   double alpha, std::uint64_t run_seed) const {
    RunConfig rc;
    rc.problem = &problem;
    rc.graphs = &graphs;
    rc.set = &set;
    rc.state_quantizer = sq;
    rc.grad_quantizer = gq;
    rc.alpha = alpha;
    rc.seed = run_seed;
    return rc;
  }
};

}  // namespace

TEST_CASE("single agent with identity quantizers is a centralized conditional-gradient loop") {
  const int d = 8;
  const std::uint64_t T = 200;
  const Fixture fx(1, d, T, 3, GraphKind::Complete, 1);
  RunConfig rc = fx.config(identity_spec(), identity_spec(1000.0), 0.1, 5);
  rc.record_decisions = true;
  const Trace trace = run(rc);

  // independently coded loop: x_{t+1} = x_t + alpha (lmo(grad f_t(x_t)) - x_t)
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (std::uint64_t t = 1; t <= T; ++t) {
    CHECK(trace.decisions[trace.at(t, 1)] == x);
    const Eigen::VectorXd g = fx.problem.loss_grad(1, t, x);
    const Eigen::VectorXd v = lmo(fx.set, g);
    x = x + 0.1 * (v - x);
  }
}

TEST_CASE("two agents on a complete graph average exactly") {
  const int d = 2;
  const ConstraintSet set = make_l1_ball(d, 2.0);
  const OnlineProblem problem = OnlineProblem::regression_stream(
      4, 2, d, 1, 0.0, std::nullopt, set);
  const GraphSequence graphs = generate_graphs(GraphKind::Complete, 2, 1, 1, 7);
  RunConfig rc;
  rc.problem = &problem;
  rc.graphs = &graphs;
  rc.set = &set;
  rc.state_quantizer = identity_spec();
  rc.grad_quantizer = identity_spec(1000.0);
  rc.alpha = 0.5;
  rc.initial_decisions = {vec({2, 0}), vec({0, 2})};
  rc.record_decisions = true;
  const Trace trace = run(rc);
  CHECK(trace.consensus[trace.at(1, 1)] == vec({1, 1}));
  CHECK(trace.consensus[trace.at(1, 2)] == vec({1, 1}));
  CHECK(trace.init_dispersion == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(trace.init_state_norm == doctest::Approx(4.0));
}

TEST_CASE("the update is the stated convex combination") {
  // constant gradient pointing at +e0, so v = (-2, 0) every round
  const ConstraintSet set = make_l1_ball(2, 2.0);
  Eigen::MatrixXd P(1, 2);
  P << 1.0, 0.0;
  Eigen::VectorXd q(1);
  q << -10.0;  // grad at 0: p (p'0 - q) = (10, 0) -> lmo = (-2, 0)
  const OnlineProblem problem =
      OnlineProblem::explicit_data(1, 2, 1, 0.0, {P}, {q});
  const GraphSequence graphs = generate_graphs(GraphKind::Complete, 1, 1, 1, 7);
  RunConfig rc;
  rc.problem = &problem;
  rc.graphs = &graphs;
  rc.set = &set;
  rc.state_quantizer = identity_spec();
  rc.grad_quantizer = identity_spec(1000.0);
  rc.alpha = 0.5;
  rc.seed = 1;
  Engine engine(rc);
  engine.step();
  CHECK(engine.decisions()[0] == vec({-1, 0}));  // 0 + 0.5 ((-2,0) - 0)
}

TEST_CASE("same seed and config give a bit-identical trace") {
  const Fixture fx(5, 6, 60, 11);
  RunConfig rc = fx.config(probabilistic_spec(1.0, 2.0),
                           probabilistic_spec(1.0, 500.0), 0.2, 9);
  rc.record_decisions = true;
  rc.record_tracking = true;
  const Trace a = run(rc);
  const Trace b = run(rc);
  CHECK(traces_bit_identical(a, b));

  RunConfig rc2 = rc;
  rc2.seed = 10;
  const Trace c = run(rc2);
  CHECK_FALSE(traces_bit_identical(a, c));
}

TEST_CASE("all visited states stay feasible and coarse quantization triggers the fallback") {
  const Fixture fx(4, 3, 300, 21);
  // cap the level at 1 so quantized states frequently leave the small ball
  RunConfig rc = fx.config(probabilistic_spec(1.0, 2.0, 1),
                           probabilistic_spec(1.5, 500.0), 0.3, 33);
  rc.record_decisions = true;
  const Trace trace = run(rc);
  int fallbacks = 0;
  for (std::uint64_t t = 1; t <= trace.T; ++t) {
    for (int i = 1; i <= trace.n; ++i) {
      const std::size_t cell = trace.at(t, i);
      CHECK(contains(fx.set, trace.decisions[cell]));
      CHECK(contains(fx.set, trace.consensus[cell]));
      if (trace.fallback[cell]) {
        ++fallbacks;
        // the exact fallback is charged full precision on the state message,
        // and transmits the state unchanged
        CHECK(trace.state_err_sq[cell] == 0.0);
        CHECK(trace.bits[cell] >= 64 * 3);
      }
    }
  }
  CHECK(fallbacks > 0);
}

TEST_CASE("gradient tracking conserves the quantized gradient sum") {
  const Fixture fx(6, 5, 400, 31);
  for (const bool exact : {true, false}) {
    RunConfig rc = exact ? fx.config(identity_spec(), identity_spec(1000.0),
                                     0.1, 1)
                         : fx.config(probabilistic_spec(1.0, 2.0),
                                     probabilistic_spec(1.0, 1000.0), 0.1, 1);
    rc.record_tracking = true;
    const Trace trace = run(rc);
    for (std::uint64_t t = 1; t <= trace.T; ++t) {
      Eigen::VectorXd lhs = Eigen::VectorXd::Zero(trace.d);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(trace.d);
      for (int i = 1; i <= trace.n; ++i) {
        lhs += trace.gbar[trace.at(t, i)];
        rhs += trace.qgrad[trace.at(t, i)];
      }
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("the average state follows the mixed-error recursion") {
  const Fixture fx(5, 4, 300, 41);
  const double alpha = 0.15;
  RunConfig rc = fx.config(probabilistic_spec(1.0, 2.0),
                           probabilistic_spec(1.0, 500.0), alpha, 2);
  const Trace trace = run(rc);
  for (std::uint64_t t = 2; t <= trace.T; ++t) {
    const Eigen::VectorXd predicted =
        (1.0 - alpha) * (trace.x_avg[t - 2] + trace.e_mean[t - 2]) +
        alpha * trace.v_avg[t - 2];
    CHECK((trace.x_avg[t - 1] - predicted).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("recorded quantization errors respect the resolution bound in aggregate") {
  const Fixture fx(6, 10, 500, 51);
  const QuantizerSpec sq = probabilistic_spec(1.0, 2.0);
  RunConfig rc = fx.config(sq, probabilistic_spec(1.0, 1000.0), 0.1, 3);
  const Trace trace = run(rc);
  double ratio = 0.0;
  std::size_t count = 0;
  const double R2 = 4.0;
  for (std::uint64_t t = 1; t <= trace.T; ++t) {
    const double eps = resolution(sq, trace.d, t);
    for (int i = 1; i <= trace.n; ++i) {
      ratio += trace.state_err_sq[trace.at(t, i)] / (eps * R2);
      ++count;
    }
  }
  CHECK(ratio / count <= 1.1);
}

TEST_CASE("vanishing quantization converges to the exact trace coordinatewise") {
  const int d = 6;
  const std::uint64_t T = 1000;
  const Fixture fx(4, d, T, 61);
  RunConfig exact = fx.config(identity_spec(), identity_spec(1000.0), 0.05, 4);
  exact.record_decisions = true;
  // no cap, cubic levels: by t = 1000 the grid is 1e-9
  RunConfig fine = fx.config(probabilistic_spec(3.0, 2.0),
                             probabilistic_spec(3.0, 1000.0), 0.05, 4);
  fine.record_decisions = true;
  const Trace a = run(exact);
  const Trace b = run(fine);
  for (int i = 1; i <= 4; ++i) {
    const Eigen::VectorXd diff =
        a.decisions[a.at(T, i)] - b.decisions[b.at(T, i)];
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("step size validation cites the required range") {
  const Fixture fx(2, 3, 5, 71);
  RunConfig rc = fx.config(identity_spec(), identity_spec(), 0.0, 1);
  CHECK_THROWS_WITH_AS(run(rc), doctest::Contains("0 < α ≤ 1"), ConfigError);
  rc.alpha = 1.5;
  CHECK_THROWS_AS(run(rc), ConfigError);
  rc.alpha = 1.0;
  CHECK_NOTHROW(run(rc));
}

TEST_CASE("schedule form of the step size") {
  CHECK(alpha_from_schedule(0.5, 0.3, 2000) ==
        doctest::Approx(1.0 / (2.0 * std::pow(2000.0, 0.3))).epsilon(1e-15));
  CHECK_THROWS_AS((void)alpha_from_schedule(10.0, 0.1, 2), ConfigError);
  CHECK_THROWS_AS((void)alpha_from_schedule(0.0, 0.3, 100), ConfigError);
}

TEST_CASE("non-finite gradients abort with the agent and round named") {
  const ConstraintSet set = make_l1_ball(2, 2.0);
  Eigen::MatrixXd P1(1, 2), P2(1, 2);
  P1 << 1.0, 0.0;
  P2 << 1e308, 1e308;
  Eigen::VectorXd q1(1), q2(1);
  q1 << 0.0;
  q2 << 1e308;  // residual overflows to -inf at round 2
  const OnlineProblem problem =
      OnlineProblem::explicit_data(1, 2, 2, 0.0, {P1, P2}, {q1, q2});
  const GraphSequence graphs = generate_graphs(GraphKind::Complete, 1, 2, 1, 7);
  RunConfig rc;
  rc.problem = &problem;
  rc.graphs = &graphs;
  rc.set = &set;
  rc.state_quantizer = identity_spec();
  rc.grad_quantizer = identity_spec(1e30);
  rc.alpha = 0.5;
  CHECK_THROWS_WITH_AS(run(rc), doctest::Contains("round 2"), RuntimeFailure);
}

TEST_CASE("initial decisions are validated against the set") {
  const Fixture fx(2, 2, 3, 81);
  RunConfig rc = fx.config(identity_spec(), identity_spec(), 0.5, 1);
  rc.initial_decisions = {vec({3, 0}), vec({0, 0})};
  CHECK_THROWS_AS(run(rc), ConfigError);
  rc.initial_decisions = {vec({1, 0})};
  CHECK_THROWS_AS(run(rc), ConfigError);
}

TEST_CASE("trace accounting: bits accumulate both message kinds") {
  const Fixture fx(3, 4, 10, 91);
  RunConfig rc = fx.config(identity_spec(), identity_spec(1000.0), 0.2, 1);
  const Trace trace = run(rc);
  for (std::uint64_t t = 1; t <= trace.T; ++t)
    for (int i = 1; i <= trace.n; ++i)
      CHECK(trace.bits[trace.at(t, i)] == 2u * 64u * 4u);
  CHECK(trace.total_bits() == 2u * 64u * 4u * 3u * 10u);
}
