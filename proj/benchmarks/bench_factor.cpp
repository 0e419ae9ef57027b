#include <benchmark/benchmark.h>

#include "crowdbp/factor_bp.hpp"
#include "crowdbp/synthgen.hpp"
#include "support.hpp"

using namespace crowdbp;

namespace {

struct Factor
{
    WorkerPrior prior;
    std::vector<Label> answers;
    Matrix incoming;
};

Factor make_factor(Index degree, Index k)
{
    Rng rng {degree * 31 + k};
    std::vector<Label> answers(degree);
    for (auto& a : answers) a = static_cast<Label>(support::uniform_index(rng, 0, k - 1));
    return {WorkerPrior::one_coin(k, 2.0, 1.0), std::move(answers), support::random_simplex_rows(rng, degree, k)};
}

void BM_FactorExact(benchmark::State& state)
{
    const auto f = make_factor(static_cast<Index>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(factor_messages_exact(f.prior, f.answers, f.incoming));
}
BENCHMARK(BM_FactorExact)->Arg(4)->Arg(8)->Arg(10);

void BM_FactorDP(benchmark::State& state)
{
    const auto f = make_factor(static_cast<Index>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(factor_messages_onecoin_dp(f.prior, f.answers, f.incoming));
}
BENCHMARK(BM_FactorDP)->Arg(4)->Arg(8)->Arg(64)->Arg(1000);

void BM_FactorMC(benchmark::State& state)
{
    const auto f = make_factor(8, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(factor_messages_mc(f.prior, f.answers, f.incoming, static_cast<Index>(state.range(0)), 1));
    }
}
BENCHMARK(BM_FactorMC)->Arg(25)->Arg(400)->Arg(6400);

void BM_BPRun(benchmark::State& state)
{
    ScenarioSpec spec;
    spec.true_prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    spec.seed = 1;
    const Scenario s = generate_scenario(spec);
    const Index n = s.dataset.num_tasks();
    const Matrix f = Matrix::Constant(static_cast<Eigen::Index>(n), 2, 0.5);
    BPOptions options;
    options.max_sweeps = static_cast<Index>(state.range(0));
    options.tolerance = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(bp_run(s.dataset.observations, f, *spec.true_prior, options));
}
BENCHMARK(BM_BPRun)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
