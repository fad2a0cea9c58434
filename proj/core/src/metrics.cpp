#include "guardfl/metrics.hpp"

#include <algorithm>

#include "guardfl/errors.hpp"

namespace guardfl {

double compute_ds(double asr, double acc) {
  const double suppressed = 1.0 - asr;
  const double denom = acc + suppressed;
  if (denom == 0.0) return 0.0;
  return 2.0 * acc * suppressed / denom;
}

std::size_t BackdoorTestSet::eligible() const {
  std::size_t count = 0;
  for (int label : original_labels) {
    if (label != target_label) ++count;
  }
  return count;
}

BackdoorTestSet make_backdoor_testset(const Dataset& benign_test,
                                      const TriggerSpec& trigger) {
  BackdoorTestSet out;
  out.features = benign_test.features;
  out.original_labels = benign_test.labels;
  out.target_label = trigger.target_label;
  for (std::size_t i = 0; i < out.features.rows(); ++i) {
    auto row = out.features.row(i);
    for (std::size_t k = 0; k < trigger.indices.size(); ++k) {
      row[trigger.indices[k]] = trigger.values[k];
    }
  }
  return out;
}

double compute_asr(const TaskModel& model, const BackdoorTestSet& test_set) {
  std::size_t eligible = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_set.features.rows(); ++i) {
    if (test_set.original_labels[i] == test_set.target_label) continue;
    ++eligible;
    if (model.predict(test_set.features.row(i)) == test_set.target_label) ++hits;
  }
  if (eligible == 0) throw MetricError("compute_asr: no eligible samples");
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

DetectionTally score_detection(const std::vector<int>& flagged,
                               const std::vector<int>& selected,
                               int num_malicious) {
  DetectionTally tally;
  for (int id : selected) {
    const bool truly_malicious = id < num_malicious;
    const bool was_flagged = std::find(flagged.begin(), flagged.end(), id) != flagged.end();
    if (was_flagged && truly_malicious) ++tally.tp;
    if (was_flagged && !truly_malicious) ++tally.fp;
    if (!was_flagged && truly_malicious) ++tally.fn;
  }
  return tally;
}

DetectionPrf detection_prf(const DetectionTally& tally) {
  DetectionPrf out;
  if (tally.tp + tally.fp > 0) {
    out.precision = static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fp);
  }
  if (tally.tp + tally.fn > 0) {
    out.recall = static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fn);
  }
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

double grad_norm_sq(const TaskModel& model, const Dataset& probe) {
  const FlatModel grad = model.gradient(probe);
  const double norm = l2_norm(grad.flat());
  return norm * norm;
}

Vec convergence_monitor(const std::vector<int>& dims,
                        const std::vector<FlatModel>& trajectory,
                        const Dataset& probe) {
  Vec running;
  running.reserve(trajectory.size());
  double total = 0.0;
  for (std::size_t r = 0; r < trajectory.size(); ++r) {
    total += grad_norm_sq(TaskModel(dims, trajectory[r]), probe);
    running.push_back(total / static_cast<double>(r + 1));
  }
  return running;
}

}  // namespace guardfl
