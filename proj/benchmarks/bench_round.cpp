#include <benchmark/benchmark.h>

#include "guardfl/config.hpp"
#include "guardfl/simulation.hpp"

namespace {

using namespace guardfl;

ExperimentConfig round_config(DefenseKind defense) {
  ExperimentConfig cfg = parse_config("{}");
  cfg.sim.total_clients = 40;
  cfg.sim.clients_per_round = 8;
  cfg.sim.max_rounds = 1000000;  // rounds are driven by the benchmark loop
  cfg.sim.local_epochs = 2;
  cfg.sim.seed = 3;
  cfg.sim.pmr = 0.25;
  cfg.sim.defense = defense;
  cfg.data.per_class = 250;
  cfg.attack.kind = AttackKind::pgd_replace;
  cfg.attack.start_round = 1;
  return cfg;
}

void BM_RoundFedAvg(benchmark::State& state) {
  Simulation sim(round_config(DefenseKind::none));
  for (auto _ : state) {
    RoundReport report = sim.run_round();
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_RoundFedAvg)->Unit(benchmark::kMillisecond);

void BM_RoundGuarded(benchmark::State& state) {
  Simulation sim(round_config(DefenseKind::guardfl));
  for (auto _ : state) {
    RoundReport report = sim.run_round();
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_RoundGuarded)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
