#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qkdd/kernels.hpp"
#include "qkdd/qstate.hpp"

namespace {

std::vector<qkdd::DensityMatrix> make_states(int n_qubits, int count)
{
    const auto spec = qkdd::FeatureMapSpec::make(n_qubits, n_qubits, 4, "pauli-y-z", "cnot-ring");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<qkdd::DensityMatrix> states;
    std::vector<double> x(static_cast<std::size_t>(n_qubits));
    for (int i = 0; i < count; ++i) {
        for (auto& v : x) v = u(rng);
        states.push_back(qkdd::encode(spec, x));
    }
    return states;
}

void BM_GramSerial(benchmark::State& state)
{
    const auto states = make_states(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(qkdd::serial::gram(states));
}

void BM_GramParallel(benchmark::State& state)
{
    const auto states = make_states(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(qkdd::gram(states));
}

void BM_Encode(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const auto spec = qkdd::FeatureMapSpec::make(n, n, 4, "pauli-y-z", "cnot-ring");
    std::vector<double> x(static_cast<std::size_t>(n), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(qkdd::encode(spec, x));
}

}  // namespace

BENCHMARK(BM_GramSerial)->Args({3, 128})->Args({5, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Args({3, 128})->Args({5, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Encode)->Arg(2)->Arg(4)->Arg(6);

BENCHMARK_MAIN();
