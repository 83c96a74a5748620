// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "compass/decomposer.hpp"
#include "compass/ga.hpp"
#include "compass/partitioner.hpp"

using namespace compass;

namespace {

struct Fixture {
    ChipSpec chip;
    DecomposedModel model;
};

const Fixture& vgg16_s() {
    static const Fixture f = [] {
        Fixture x{builtin_chip("S"), {}};
        x.model = decompose(build_benchmark("vgg16"), x.chip);
        return x;
    }();
    return f;
}

const std::vector<Individual>& population() {
    static const std::vector<Individual> pop = [] {
        const auto p = Problem::create(build_benchmark("vgg16"), builtin_chip("M"));
        std::vector<Individual> v(400);
        for (size_t i = 0; i < v.size(); ++i) v[i].group = generate_random_group(p, i);
        return v;
    }();
    return pop;
}

void BM_ValidityMapSerial(benchmark::State& state) {
    const auto& f = vgg16_s();
    for (auto _ : state) benchmark::DoNotOptimize(build_validity_map_serial(f.model, f.chip));
    state.counters["units"] = f.model.size();
}

void BM_ValidityMapParallel(benchmark::State& state) {
    const auto& f = vgg16_s();
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_validity_map(f.model, f.chip, workers));
    state.counters["units"] = f.model.size();
}

void BM_EvaluateSerial(benchmark::State& state) {
    auto pop = population();
    CostOptions opts;
    for (auto _ : state) {
        evaluate_population_serial(pop, opts);
        benchmark::DoNotOptimize(pop.front().pgf);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pop.size()));
}

void BM_EvaluateParallel(benchmark::State& state) {
    auto pop = population();
    CostOptions opts;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        evaluate_population(pop, opts, workers);
        benchmark::DoNotOptimize(pop.front().pgf);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pop.size()));
}

}  // namespace

BENCHMARK(BM_ValidityMapSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ValidityMapParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_EvaluateParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
