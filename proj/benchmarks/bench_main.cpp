#include <benchmark/benchmark.h>

#include "meltctl/benchmarks.hpp"
#include "meltctl/config.hpp"
#include "meltctl/driver.hpp"
#include "meltctl/state.hpp"

namespace {

using namespace meltctl;

SimulationConfig bench_config(int nx) {
  SimulationConfig cfg = example2_config();
  cfg.mesh.cells = {nx, 2 * nx};
  return cfg;
}

void BM_Assemble(benchmark::State& st) {
  const StructuredMesh mesh = build_mesh(bench_config(static_cast<int>(st.range(0))).mesh);
  for (auto _ : st) benchmark::DoNotOptimize(assemble_operators(mesh, 1.0, 0.1));
}

void BM_Advect(benchmark::State& st) {
  const SimulationConfig cfg = bench_config(static_cast<int>(st.range(0)));
  const StructuredMesh mesh = build_mesh(cfg.mesh);
  const VelocityField v = build_velocity(cfg, mesh);
  const DesiredState d = example2_fields(mesh);
  for (auto _ : st) {
    const Feet feet = characteristic_feet(mesh, v, cfg.tau, cfg.tau);
    benchmark::DoNotOptimize(advect(mesh, feet, d.y_d, d.xi_d));
  }
}

void BM_SolveState(benchmark::State& st) {
  const SimulationConfig cfg = bench_config(static_cast<int>(st.range(0)));
  const StructuredMesh mesh = build_mesh(cfg.mesh);
  const StateOperators ops = assemble_operators(mesh, cfg.kappa, cfg.tau);
  const DesiredState d = example2_fields(mesh);
  const AdvectedPair adv{d.y_d, d.xi_d, 0.0};
  const Vector u = Vector::Constant(ops.num_controls(), 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(solve_state(ops, u, adv));
}

void BM_PathStep(benchmark::State& st) {
  SimulationConfig cfg = bench_config(static_cast<int>(st.range(0)));
  cfg.steps = 1;
  RunOptions ro;
  ro.write_files = false;
  for (auto _ : st) benchmark::DoNotOptimize(run_simulation(cfg, ro));
}

}  // namespace

BENCHMARK(BM_Assemble)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Advect)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveState)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PathStep)->Arg(25)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
