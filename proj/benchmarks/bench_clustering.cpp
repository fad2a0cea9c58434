#include <benchmark/benchmark.h>

#include "guardfl/gae.hpp"
#include "guardfl/hdbscan.hpp"
#include "guardfl/rng.hpp"

namespace {

using namespace guardfl;

SubGraph make_subgraph(int m, int dim, std::uint64_t seed) {
  RngStream rng(seed, "bench-sub");
  SubGraph sub;
  sub.features = Matrix(m, dim);
  for (double& x : sub.features.data()) x = rng.normal();
  sub.adjacency = Matrix(m, m);
  for (int i = 0; i < m; ++i) {
    sub.adjacency(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      sub.adjacency(i, j) = sub.adjacency(j, i) = rng.uniform();
    }
  }
  for (int i = 0; i < m; ++i) sub.client_ids.push_back(i);
  return sub;
}

void BM_GaeFit(benchmark::State& state) {
  const SubGraph sub = make_subgraph(static_cast<int>(state.range(0)), 106, 11);
  GaeConfig cfg;
  for (auto _ : state) {
    RngStream rng(11, "bench-fit");
    GaeState fitted = fit_gae(sub, 2, cfg, rng);
    benchmark::DoNotOptimize(fitted);
  }
}
BENCHMARK(BM_GaeFit)->Arg(8)->Arg(16)->Arg(32);

void BM_ClusterCount(benchmark::State& state) {
  const SubGraph sub = make_subgraph(static_cast<int>(state.range(0)), 106, 12);
  for (auto _ : state) {
    int q = estimate_num_clusters(sub.features);
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(BM_ClusterCount)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
