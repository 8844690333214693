// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "afsmote/evaluation.hpp"
#include "afsmote/kernels.hpp"
#include "generators.hpp"

using namespace afsmote;

namespace {

void knn_args(benchmark::internal::Benchmark* b) {
  for (const long n : {500, 2000, 8000}) b->Args({n, 5});
}

template <bool Parallel>
void BM_KnnTable(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix pts = gen::random_matrix(rng, n, 8);
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto t = Parallel ? kernels::knn_table(pts, pts, k, true) : kernels::serial::knn_table(pts, pts, k, true);
    benchmark::DoNotOptimize(t.index.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void BM_Bootstrap(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto y = gen::random_labels(rng, n, 0.1);
  const auto p = gen::informative_scores(rng, y);
  const kernels::Statistic ap = [](std::span<const double> s, std::span<const int> l) {
    return average_precision(s, l);
  };
  for (auto _ : state) {
    auto r = Parallel ? kernels::bootstrap_replicates(ap, p, y, 2000, 7, false)
                      : kernels::serial::bootstrap_replicates(ap, p, y, 2000, 7, false);
    benchmark::DoNotOptimize(r.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}

template <bool Parallel>
void BM_Jackknife(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto y = gen::random_labels(rng, n, 0.1);
  const auto p = gen::informative_scores(rng, y);
  const kernels::Statistic ap = [](std::span<const double> s, std::span<const int> l) {
    return average_precision(s, l);
  };
  for (auto _ : state) {
    auto v = Parallel ? kernels::jackknife_values(ap, p, y) : kernels::serial::jackknife_values(ap, p, y);
    benchmark::DoNotOptimize(v.data());
  }
}

}  // namespace

BENCHMARK(BM_KnnTable<false>)->Name("knn_table/serial")->Apply(knn_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnTable<true>)->Name("knn_table/openmp")->Apply(knn_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<false>)->Name("bootstrap_2000/serial")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<true>)->Name("bootstrap_2000/openmp")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jackknife<false>)->Name("jackknife/serial")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jackknife<true>)->Name("jackknife/openmp")->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
