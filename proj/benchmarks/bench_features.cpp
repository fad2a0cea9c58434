#include <benchmark/benchmark.h>

#include "guardfl/graph_features.hpp"
#include "guardfl/rng.hpp"
#include "guardfl/task_model.hpp"

namespace {

using namespace guardfl;

std::vector<ClientUpdateRecord> make_records(int participants, std::uint64_t seed) {
  const TaskModel global({20, 16, 16, 4}, seed);
  std::vector<ClientUpdateRecord> records;
  RngStream rng(seed, "bench-records");
  for (int id = 0; id < participants; ++id) {
    FlatModel w = global.params();
    for (double& x : w.params()) x += 0.05 * rng.normal();
    ClientUpdateRecord r;
    r.client_id = id;
    r.update = subtract(w, global.params());
    r.prev_update = FlatModel::zeros_like(w);
    r.weights = std::move(w);
    r.sample_count = 25;
    records.push_back(std::move(r));
  }
  return records;
}

void BM_FeatureMatrix(benchmark::State& state) {
  const auto records = make_records(static_cast<int>(state.range(0)), 7);
  const TaskModel global({20, 16, 16, 4}, 7);
  for (auto _ : state) {
    Matrix x = build_feature_matrix(records, global.params(), 40);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_FeatureMatrix)->Arg(8)->Arg(16)->Arg(32);

void BM_Adjacency(benchmark::State& state) {
  const auto records = make_records(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    Matrix e = build_adjacency(records, 40);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_Adjacency)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
