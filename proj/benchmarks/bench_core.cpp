// Microbenchmarks of the hot paths: one training step touches stack_nll and
// h_and_grad (which calls matrix_exp); evaluation and PNS dominate the rest.

#include <benchmark/benchmark.h>

#include <random>

#include "grandag/constraint.hpp"
#include "grandag/graph.hpp"
#include "grandag/metrics.hpp"
#include "grandag/nn.hpp"
#include "grandag/optim.hpp"
#include "grandag/post.hpp"

using namespace grandag;

namespace {

Eigen::MatrixXd normals(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

NnStack default_stack(int d) {
  Rng rng(1);
  NetConfig c;
  c.d = d;
  return NnStack::xavier(c, rng);
}

void BM_MatrixExp(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Eigen::MatrixXd a = normals(d, d, 2).cwiseAbs() * (2.0 / d);
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exp(a));
}
BENCHMARK(BM_MatrixExp)->Arg(10)->Arg(50)->Arg(100);

void BM_StackNllGrad(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const NnStack s = default_stack(d);
  const Eigen::MatrixXd batch = normals(64, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(stack_nll(s, batch, true));
}
BENCHMARK(BM_StackNllGrad)->Arg(10)->Arg(50);

void BM_HAndGrad(benchmark::State& state) {
  const NnStack s = default_stack(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(h_and_grad(s));
}
BENCHMARK(BM_HAndGrad)->Arg(10)->Arg(50);

void BM_SubproblemStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const NnStack s = default_stack(d);
  const Eigen::MatrixXd batch = normals(64, d, 4);
  for (auto _ : state) benchmark::DoNotOptimize(subproblem_objective(s, batch, 0.1, 1e-2, true));
}
BENCHMARK(BM_SubproblemStep)->Arg(10)->Arg(50);

void BM_Sid(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(5);
  const Dag truth = sample_er(d, d, rng);
  const Dag est = sample_er(d, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sid(truth, est));
}
BENCHMARK(BM_Sid)->Arg(10)->Arg(50)->Arg(100);

void BM_ExtraTrees(benchmark::State& state) {
  const Eigen::MatrixXd x = normals(800, 49, 6);
  const Eigen::VectorXd y = x.col(0).array().sin() + 0.1 * x.col(1).array();
  ExtraTreesOptions opts;
  opts.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng(7);
    benchmark::DoNotOptimize(extra_trees_importance(x, y, opts, rng));
  }
}
BENCHMARK(BM_ExtraTrees)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
