#pragma once

#include <vector>

#include "guardfl/attacks.hpp"
#include "guardfl/dataset.hpp"
#include "guardfl/task_model.hpp"

namespace guardfl {

// Defense score: harmonic-style combination of accuracy and attack
// suppression, 2 * acc * (1 - asr) / (acc + (1 - asr)). Inputs and output
// are fractions; zero denominator yields 0.
double compute_ds(double asr, double acc);

// Benign samples with the full trigger applied; rows originally labeled
// with the target class are excluded from the attack success rate.
struct BackdoorTestSet {
  Matrix features;
  std::vector<int> original_labels;
  int target_label = 0;
  std::size_t eligible() const;
};

BackdoorTestSet make_backdoor_testset(const Dataset& benign_test,
                                      const TriggerSpec& trigger);

// Fraction of eligible triggered samples predicted as the target label.
double compute_asr(const TaskModel& model, const BackdoorTestSet& test_set);

struct DetectionTally {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

// Scores one round's flagged set against ground truth over the selected
// clients: flagged malicious -> tp, flagged benign -> fp, unflagged
// malicious -> fn.
DetectionTally score_detection(const std::vector<int>& flagged,
                               const std::vector<int>& selected,
                               int num_malicious);

struct DetectionPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pooled precision/recall/F1; empty denominators give 0.
DetectionPrf detection_prf(const DetectionTally& tally);

// Squared L2 norm of the full-batch task-loss gradient at the model.
double grad_norm_sq(const TaskModel& model, const Dataset& probe);

// Per-round squared gradient norms at each global model of a trajectory,
// returned as their running average series (probe fixed across rounds).
Vec convergence_monitor(const std::vector<int>& dims,
                        const std::vector<FlatModel>& trajectory,
                        const Dataset& probe);

}  // namespace guardfl
