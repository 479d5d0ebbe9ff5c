#include <benchmark/benchmark.h>

#include "qdopfo/engine.hpp"
#include "qdopfo/metrics.hpp"

using namespace qdopfo;

namespace {

const ConstraintSet& bench_set() {
  static const ConstraintSet set = make_l1_ball(30, 2.0);
  return set;
}

const OnlineProblem& bench_problem() {
  static const OnlineProblem problem = OnlineProblem::regression_stream(
      7, 10, 30, 2000, 5e-6, std::nullopt, bench_set());
  return problem;
}

const GraphSequence& bench_graphs() {
  static const GraphSequence graphs =
      generate_graphs(GraphKind::RandomWindow, 10, 2000, 5, 99);
  return graphs;
}

}  // namespace

static void bench_quantize(benchmark::State& state) {
  QuantizerSpec spec;
  spec.kind = QuantizerKind::Probabilistic;
  spec.schedule = LevelSchedule::power(1.5);
  spec.value_range = 2.0;
  CounterRng rng = derive_stream(1, StreamTag::Generic);
  Eigen::VectorXd y(30);
  for (int j = 0; j < 30; ++j) y[j] = rng.uniform(-2.0, 2.0);
  std::uint64_t t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantize(spec, y, t, rng));
    t = t % 2000 + 1;
  }
}
BENCHMARK(bench_quantize);

static void bench_lmo(benchmark::State& state) {
  CounterRng rng = derive_stream(2, StreamTag::Generic);
  Eigen::VectorXd dir(30);
  for (int j = 0; j < 30; ++j) dir[j] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lmo(bench_set(), dir));
  }
}
BENCHMARK(bench_lmo);

static void bench_engine_round(benchmark::State& state) {
  QuantizerSpec spec;
  spec.kind = QuantizerKind::Probabilistic;
  spec.schedule = LevelSchedule::power(1.5);
  spec.value_range = 2.0;
  RunConfig rc;
  rc.problem = &bench_problem();
  rc.graphs = &bench_graphs();
  rc.set = &bench_set();
  rc.state_quantizer = spec;
  rc.grad_quantizer = spec;
  rc.grad_quantizer.value_range = 1000.0;
  rc.alpha = 0.05;
  rc.seed = 5;
  for (auto _ : state) {
    state.PauseTiming();
    Engine engine(rc);
    state.ResumeTiming();
    for (int r = 0; r < 100; ++r) engine.step();
  }
}
BENCHMARK(bench_engine_round)->Unit(benchmark::kMillisecond);

static void bench_comparator(benchmark::State& state) {
  std::uint64_t t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(comparator(bench_problem(), bench_set(), t));
    t = t % 2000 + 1;
  }
}
BENCHMARK(bench_comparator)->Unit(benchmark::kMicrosecond);

static void bench_weight_matrix(benchmark::State& state) {
  std::uint64_t t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bench_graphs().weight_matrix(t));
    t = t % 2000 + 1;
  }
}
BENCHMARK(bench_weight_matrix);

BENCHMARK_MAIN();
