#include <benchmark/benchmark.h>

#include "subsel/dataio.hpp"
#include "subsel/evaluators.hpp"
#include "subsel/influence.hpp"
#include "subsel/losskernels.hpp"
#include "subsel/numkit.hpp"
#include "subsel/rng.hpp"
#include "subsel/selector.hpp"

using namespace subsel;

namespace {

numkit::DenseMatrix random_spd(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    numkit::DenseMatrix m(n, n);
    for (double& e : m.entries()) e = rng.normal();
    numkit::DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += m(k, i) * m(k, j);
            a(i, j) = s + (i == j ? 1.0 : 0.0);
        }
    return a;
}

std::vector<std::size_t> iota_idx(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

void BM_CholeskySolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_spd(n, 1);
    std::vector<double> b(n, 1.0);
    for (auto _ : state) {
        auto x = numkit::cholesky_solve(a, b);
        benchmark::DoNotOptimize(x);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CholeskySolve)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_CgSolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_spd(n, 2);
    auto op = numkit::LinearOperator::from_matrix(a);
    std::vector<double> b(n, 1.0);
    for (auto _ : state) {
        auto res = numkit::cg_solve(op, b);
        benchmark::DoNotOptimize(res.x);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CgSolve)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_FitLogistic(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, n, 10, 3, p);
    auto kernel = loss::logistic_kernel(10, 1e-4);
    auto idx = iota_idx(n);
    for (auto _ : state) {
        auto model = loss::fit_erm(kernel, data, idx);
        benchmark::DoNotOptimize(model.theta);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitLogistic)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_ResidualScores(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    dataio::SyntheticParams p;
    auto pool = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, n, 10, 4, p);
    auto validation = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 200, 10, 5, p);
    auto model = loss::fit_erm(loss::squared_kernel(10, 1e-4), pool, iota_idx(100));
    std::vector<std::size_t> candidates;
    for (std::size_t i = 100; i < n; ++i) candidates.push_back(i);
    for (auto _ : state) {
        auto scores = influence::residual_scores(model, validation, candidates);
        benchmark::DoNotOptimize(scores);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ResidualScores)->RangeMultiplier(4)->Range(512, 8192)->Complexity();

void BM_GreedyIteration(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    dataio::SyntheticParams p;
    auto pool = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, n, 10, 6, p);
    auto validation = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 200, 10, 7, p);
    auto kernel = loss::squared_kernel(10, 1e-4);
    auto objective = select::validation_mean_loss(validation);
    auto initial = iota_idx(20);
    for (auto _ : state) {
        select::SelectOptions opts;
        opts.iterations = 10;
        auto trace =
            select::epsilon_greedy_select(kernel, pool, validation, initial, objective, opts);
        benchmark::DoNotOptimize(trace);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GreedyIteration)->RangeMultiplier(2)->Range(512, 4096)->Complexity();

void BM_ForestFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::hetero_regression, n, 10, 8, p);
    eval::TreeEnsembleConfig cfg;
    cfg.n_trees = 10;
    auto idx = iota_idx(n);
    for (auto _ : state) {
        auto ensemble = eval::fit_tree_ensemble(cfg, data, idx);
        benchmark::DoNotOptimize(ensemble);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestFit)->RangeMultiplier(4)->Range(128, 2048)->Complexity();

} // namespace

BENCHMARK_MAIN();
