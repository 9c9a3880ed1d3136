// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "sysid/gpr.hpp"
#include "sysid/pipeline.hpp"
#include "sysid/verify.hpp"

namespace {

using namespace sysid;

GpModel fitted(std::size_t n) {
    const auto p = verify::random_gp_problem(n, 0, 7);
    return fit(p.samples, p.mean, KernelSpec{}, 1e-4);
}

void BM_GramSerial(benchmark::State& st) {
    const GpModel m = fitted(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(gram_matrix_serial(m.kernel, m.Z));
}

void BM_GramParallel(benchmark::State& st) {
    const GpModel m = fitted(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(gram_matrix_parallel(m.kernel, m.Z));
}

void BM_PredictSerial(benchmark::State& st) {
    const GpModel m = fitted(1500);
    const auto q = verify::random_gp_problem(0, static_cast<std::size_t>(st.range(0)), 11).queries;
    for (auto _ : st) benchmark::DoNotOptimize(predict_mean_batch_serial(m, q));
}

void BM_PredictParallel(benchmark::State& st) {
    const GpModel m = fitted(1500);
    const auto q = verify::random_gp_problem(0, static_cast<std::size_t>(st.range(0)), 11).queries;
    for (auto _ : st) benchmark::DoNotOptimize(predict_mean_batch_parallel(m, q));
}

void BM_Fit(benchmark::State& st) {
    const auto p = verify::random_gp_problem(static_cast<std::size_t>(st.range(0)), 0, 7);
    FitOptions opt;
    opt.parallel = st.range(1) != 0;
    for (auto _ : st) benchmark::DoNotOptimize(fit(p.samples, p.mean, KernelSpec{}, 1e-4, opt));
}

}  // namespace

BENCHMARK(BM_GramSerial)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fit)->Args({1500, 0})->Args({1500, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
