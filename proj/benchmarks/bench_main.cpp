#include <benchmark/benchmark.h>

#include "hvacopt/adal.hpp"
#include "hvacopt/scenario.hpp"

namespace {

using namespace hvacopt;

Scenario bench_scenario(int zones) {
    GeneratorParams p;
    p.complete_graph = zones <= 5;
    return generate_scenario(zones, 99, p);
}

void BM_SimulateSchedule(benchmark::State& state) {
    const Scenario sc = bench_scenario(static_cast<int>(state.range(0)));
    const Eigen::MatrixXd flows =
        Eigen::MatrixXd::Constant(sc.model.zone_count(), sc.model.horizon(), 0.25);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_schedule(sc.model, sc.exo, flows));
}
BENCHMARK(BM_SimulateSchedule)->Arg(5)->Arg(50);

void BM_StageProjection(benchmark::State& state) {
    const Scenario sc = bench_scenario(5);
    const LocalFeasibleSet feas = local_feasible_set(sc.model.zone(0), sc.exo.t_supply);
    Eigen::VectorXd z(3 * sc.model.horizon());
    for (int t = 0; t < sc.model.horizon(); ++t)
        z.segment<3>(3 * t) = Eigen::Vector3d(27.0, 0.7, -1.0);
    for (auto _ : state) benchmark::DoNotOptimize(feas.project(z));
}
BENCHMARK(BM_StageProjection);

void BM_Residual(benchmark::State& state) {
    const Scenario sc = bench_scenario(static_cast<int>(state.range(0)));
    const auto dyn = build_discrete_dynamics(sc.model, sc.exo);
    const auto sys = StackedSystem::assemble(dyn, sc.model);
    const IterateState st = initial_state(sc.model, sc.exo, sys);
    for (auto _ : state) benchmark::DoNotOptimize(residual(st, sys));
}
BENCHMARK(BM_Residual)->Arg(5)->Arg(50);

void BM_ZoneSubproblem(benchmark::State& state) {
    const Scenario sc = bench_scenario(5);
    const auto dyn = build_discrete_dynamics(sc.model, sc.exo);
    const auto sys = StackedSystem::assemble(dyn, sc.model);
    const auto obj = relaxed_objective(sc.model, sc.exo);
    const auto feas = local_feasible_set(sc.model.zone(0), sc.exo.t_supply);
    IterateState st = initial_state(sc.model, sc.exo, sys);
    SolverConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_subproblem_zone(0, st, sys, obj, feas, cfg));
}
BENCHMARK(BM_ZoneSubproblem);

void BM_AdalIteration(benchmark::State& state) {
    const Scenario sc = bench_scenario(5);
    SolverConfig cfg;
    cfg.max_iters = 1;
    cfg.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(adal_solve(sc.model, sc.exo, cfg));
}
BENCHMARK(BM_AdalIteration);

}  // namespace

BENCHMARK_MAIN();
