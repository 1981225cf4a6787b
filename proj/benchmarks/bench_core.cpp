#include <random>

#include <benchmark/benchmark.h>

#include <bernfit/basis.hpp>
#include <bernfit/functional.hpp>
#include <bernfit/qp.hpp>
#include <bernfit/shape.hpp>
#include <bernfit/simulation.hpp>
#include <bernfit/sofr.hpp>

using namespace bernfit;

static void BM_EvalBasis(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_basis(t, n));
    t = t > 0.999 ? 0.0 : t + 0.001;
  }
}
BENCHMARK(BM_EvalBasis)->Arg(4)->Arg(10)->Arg(50);

static void BM_SolveClsq(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(10 * (n + 1), n + 1);
  Eigen::VectorXd y(z.rows());
  for (auto& v : z.reshaped()) v = nd(gen);
  for (auto& v : y) v = nd(gen);
  const ConstraintSystem c = build_constraints(ShapeSpec::of(ShapeKind::kConvex), BasisSpec{n});
  for (auto _ : state) benchmark::DoNotOptimize(solve_clsq(QpProblem{z, y, c, 0.0}));
}
BENCHMARK(BM_SolveClsq)->Arg(5)->Arg(10)->Arg(20);

static void BM_FitSofr(benchmark::State& state) {
  const auto sd = generate_scenario(ScenarioSpec{ScenarioKind::kA, static_cast<int>(state.range(0)), 0, 1, 1}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_sofr(sd.data, BasisSpec{4}, ShapeSpec::of(ShapeKind::kNonNegative)));
}
BENCHMARK(BM_FitSofr)->Arg(50)->Arg(200);

static void BM_FitFlcm(benchmark::State& state) {
  const auto sd = generate_scenario(ScenarioSpec{ScenarioKind::kB, static_cast<int>(state.range(0)), 0, 1, 1}, 0);
  const FunctionalSpec spec{ModelKind::kFlcm, 5, 5, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_constrained_gls(sd.data, spec, ShapeSpec::of(ShapeKind::kNonIncreasing)));
  }
}
BENCHMARK(BM_FitFlcm)->Arg(50)->Arg(200);
BENCHMARK_MAIN();
