#include "qlab/classify.hpp"
#include "qlab/oscsum.hpp"

#include <benchmark/benchmark.h>

using namespace qlab;

namespace {

QuadraticPair generic_pair()
{
    return {SymMatrix3::from_form({1, 1, 0, 0, 0, 0}), SymMatrix3::from_form({0, 0, 0, 0, 0, 1})};
}

QuadraticPair sum_sq()
{
    return {SymMatrix3::from_form({1, 1, 1, 0, 0, 0}), SymMatrix3::from_form({0, 0, 0, 1, 1, 1})};
}

const Vec5 kX{1.3, -0.7, 2.1, 5.5, -3.2};

void BM_LatticeSerial(benchmark::State& st)
{
    const auto pair = sum_sq();
    for (auto _ : st)
        benchmark::DoNotOptimize(lattice_exp_sum_serial(pair, st.range(0), kX));
}

void BM_LatticeParallel(benchmark::State& st)
{
    const auto pair = sum_sq();
    for (auto _ : st)
        benchmark::DoNotOptimize(lattice_exp_sum(pair, st.range(0), kX));
}

void BM_ExtensionSerial(benchmark::State& st)
{
    const auto pair = generic_pair();
    const auto g = realize({}, 16);
    const double h = 1.0 / static_cast<double>(st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(extension_eval_serial(pair, g, {}, kX, h));
}

void BM_ExtensionParallel(benchmark::State& st)
{
    const auto pair = generic_pair();
    const auto g = realize({}, 16);
    const double h = 1.0 / static_cast<double>(st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(extension_eval_direct(pair, g, {}, kX, h));
}

void BM_ExtensionSeparable(benchmark::State& st)
{
    const auto pair = normal_form_pair(1, 1);
    const auto g = realize({}, 16);
    const double h = 1.0 / static_cast<double>(st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(extension_eval(pair, g, {}, kX, h, true));
}

} // namespace

BENCHMARK(BM_LatticeSerial)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeParallel)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExtensionSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtensionParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExtensionSeparable)->Arg(64)->Arg(1024)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
