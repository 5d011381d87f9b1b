#include <benchmark/benchmark.h>

#include "nhk/expr.hpp"
#include "nhk/jacobiator.hpp"
#include "nhk/sim.hpp"
#include "nhk/systems.hpp"

namespace {

nhk::PointM snakeboard_point() { return {{0.1, 0.2, 0.3, 0.5, 0.4}, {1.0, -0.3, 0.5}}; }

void BM_ExprJet(benchmark::State& state) {
  const nhk::Expr e = nhk::parse("sin(theta+phi)*sec(phi)^2 - r*cos(phi)/(1 + theta^2)");
  const std::vector<std::string> coords = {"theta", "phi"};
  const auto c = nhk::CompiledExpr::compile(nhk::bind_parameters(e, {"r"}), coords, {{"r", 1.0}});
  std::vector<nhk::Jet2> q = {nhk::Jet2::variable(0.3, 0, 2), nhk::Jet2::variable(0.4, 1, 2)};
  for (auto _ : state) benchmark::DoNotOptimize(c.evaluate<nhk::Jet2>(q));
}
BENCHMARK(BM_ExprJet);

void BM_FrameAt(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto p = snakeboard_point();
  for (auto _ : state) benchmark::DoNotOptimize(nhk::frame_at(sys, p.q, 2));
}
BENCHMARK(BM_FrameAt);

void BM_Bivector(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto p = snakeboard_point();
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nhk::nh_bivector(sys, p, order));
}
BENCHMARK(BM_Bivector)->Arg(0)->Arg(1);

void BM_JacobiatorBrute(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto p = snakeboard_point();
  for (auto _ : state) benchmark::DoNotOptimize(nhk::jacobiator_tensor_brute(nhk::nh_bivector(sys, p, 1)));
}
BENCHMARK(BM_JacobiatorBrute);

void BM_JacobiatorGlobal(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto p = snakeboard_point();
  for (auto _ : state) {
    const nhk::PhaseSpaceModel model(sys, p, 1);
    const nhk::BivectorAtPoint pi = nhk::nh_bivector(model);
    benchmark::DoNotOptimize(nhk::jacobiator_tensor_global(model, pi, nhk::curvature_at(model)));
  }
}
BENCHMARK(BM_JacobiatorGlobal);

void BM_JacobiatorKm(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("rolling_disk");
  const nhk::PointM p{{0.2, -0.1, 0.7, 0.4}, {1.2, -0.6}};
  for (auto _ : state) benchmark::DoNotOptimize(nhk::jacobiator_tensor_km(sys, p));
}
BENCHMARK(BM_JacobiatorKm);

void BM_CrossValidate(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nhk::cross_validate(sys, 20, 42, 1e-8, threads));
}
BENCHMARK(BM_CrossValidate)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Rk4Step(benchmark::State& state) {
  const nhk::NonholonomicSystem sys = nhk::builtin("snakeboard");
  const auto p = snakeboard_point();
  for (auto _ : state) benchmark::DoNotOptimize(nhk::integrate(sys, p, 1e-3, 100));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_Rk4Step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
