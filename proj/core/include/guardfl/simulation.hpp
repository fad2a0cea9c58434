#pragma once

#include <map>
#include <string>
#include <vector>

#include "guardfl/config.hpp"
#include "guardfl/defense.hpp"
#include "guardfl/metrics.hpp"
#include "guardfl/report.hpp"
#include "guardfl/task_model.hpp"

namespace guardfl {

struct GlobalState {
  int round = 1;
  FlatModel global_model;
  FlatModel prev_global;  // previous round's broadcast; initial model at r=1
  std::map<int, FlatModel> last_round_weights;
  GraphState graph;
  Vec benign_scores;
  NormTracker norm_tracker;
};

struct ExperimentResult {
  std::vector<RoundReport> rounds;
  double final_asr = 0.0;  // percent
  double final_acc = 0.0;
  double final_ds = 0.0;
  DetectionTally pooled;   // rounds with the attack active
  DetectionPrf prf;
};

// Owns the datasets, client shards, model, and persistent defense state for
// one experiment. Rounds are sequential and fully deterministic under the
// configured seed.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& cfg);

  RoundReport run_round();
  ExperimentResult run_all(ReportWriter* writer = nullptr);

  const GlobalState& state() const { return state_; }
  const ExperimentConfig& config() const { return cfg_; }
  const Dataset& test_set() const { return test_set_; }
  int rounds_remaining() const { return cfg_.sim.max_rounds - state_.round + 1; }

 private:
  ExperimentConfig cfg_;
  std::vector<int> model_dims_;
  std::vector<Dataset> shards_;
  Dataset train_union_;  // convergence-monitor probe: the federated objective's data
  Dataset test_set_;
  BackdoorTestSet backdoor_test_;
  std::vector<int> malicious_ids_;
  GlobalState state_;

  double round_learning_rate(int round) const;
  void dump_round_artifacts(int round, const DefenseOutcome& outcome) const;
};

// Convenience runner: configure, simulate, and emit the JSONL/CSV outputs.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace guardfl
