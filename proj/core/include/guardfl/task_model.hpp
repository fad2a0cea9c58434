#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "guardfl/dataset.hpp"
#include "guardfl/flat_model.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

struct TrainConfig {
  double learning_rate = 0.05;  // > 0
  int epochs = 2;
  int batch_size = 32;
};

// Small feed-forward classifier: tanh hidden layers, softmax output,
// cross-entropy loss. Parameters live in a FlatModel whose layer entries
// alternate weight matrix and bias per layer ("fc1.w", "fc1.b", ...), so
// grouped_layers() yields one group per weight layer.
class TaskModel {
 public:
  TaskModel(std::vector<int> dims, std::uint64_t seed);
  TaskModel(std::vector<int> dims, FlatModel params);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int num_classes() const { return dims_.back(); }
  const FlatModel& params() const { return params_; }
  void set_params(FlatModel params);

  Vec logits(std::span<const double> x) const;
  // Argmax prediction; ties resolved to the lowest class index.
  int predict(std::span<const double> x) const;

  // Mean softmax cross-entropy over the given rows (all rows if empty).
  double loss(const Dataset& data) const;
  double loss(const Dataset& data, std::span<const int> rows) const;

  // Hand-derived backprop gradient of the mean loss, same shape as params.
  FlatModel gradient(const Dataset& data) const;
  FlatModel gradient(const Dataset& data, std::span<const int> rows) const;

 private:
  std::vector<int> dims_;
  FlatModel params_;

  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;
};

struct TrainResult {
  FlatModel weights;
  bool empty_data = false;  // warning: dataset was empty, weights unchanged
};

// Mini-batch gradient descent on the local shard. Batch order is drawn
// from the supplied stream, so per-client determinism is independent of
// scheduling.
TrainResult train_local(const TaskModel& model, const Dataset& data,
                        const TrainConfig& cfg, RngStream& rng);

// Fraction of argmax-correct predictions. Throws MetricError on empty data.
double evaluate(const TaskModel& model, const Dataset& data);

}  // namespace guardfl
