#include <benchmark/benchmark.h>

#include <random>

#include "stochcbf/campaign.hpp"
#include "stochcbf/qp.hpp"
#include "stochcbf/scenarios.hpp"

using namespace stochcbf;

static void BM_SolveQpRandom(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const int rows = static_cast<int>(state.range(1));
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n;
    std::vector<QpProblem> problems(64);
    for (auto& p : problems) {
        p.u_nom = Eigen::VectorXd::NullaryExpr(m, [&] { return n(gen); });
        for (int i = 0; i < rows; ++i)
            p.constraints.push_back({Eigen::VectorXd::NullaryExpr(m, [&] { return n(gen); }), n(gen), Sense::GreaterEqual});
    }
    std::size_t k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(solve_qp(problems[k++ % problems.size()]));
}
BENCHMARK(BM_SolveQpRandom)->Args({2, 2})->Args({4, 6})->Args({20, 45});

static void BM_EmStep(benchmark::State& state) {
    const CollisionScenario sc = build_collision_scenario({});
    CounterRng rng(1);
    Eigen::VectorXd x = sc.x0;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(sc.system.m());
    for (auto _ : state) {
        const Eigen::VectorXd dW = brownian_increments(sc.system.q(), 1e-3, rng);
        benchmark::DoNotOptimize(em_step(sc.system, x, u, 1e-3, dW));
    }
}
BENCHMARK(BM_EmStep);

static void BM_CollisionPolicy(benchmark::State& state) {
    const CollisionScenario sc = build_collision_scenario({});
    const Policy policy = make_collision_policy(sc, {}, TraceVariant::KNu, nullptr);
    Eigen::VectorXd x = sc.x0;
    // Agents near the centre, where the rows bind.
    for (int i = 0; i < sc.n_agents(); ++i) x.segment(4 * i, 2) *= 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(policy(x, 0.0));
}
BENCHMARK(BM_CollisionPolicy);

static void BM_CollisionReplicateOneSecond(benchmark::State& state) {
    ScenarioConfig cfg;
    cfg.mode = static_cast<ControllerMode>(state.range(0));
    cfg.horizon = 1.0;
    const PreparedScenario prepared(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(prepared.run(0, 1000000));
    state.SetLabel(to_string(cfg.mode));
}
BENCHMARK(BM_CollisionReplicateOneSecond)
    ->Arg(static_cast<int>(ControllerMode::BaselineLinear))
    ->Arg(static_cast<int>(ControllerMode::ZcbfComplete))
    ->Arg(static_cast<int>(ControllerMode::ZcbfIncomplete))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
