#include "guardfl/task_model.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"

namespace guardfl {

namespace {

std::vector<LayerSpec> make_layer_specs(const std::vector<int>& dims) {
  std::vector<LayerSpec> specs;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::string base = "fc" + std::to_string(l + 1);
    const std::size_t weights = static_cast<std::size_t>(dims[l]) * dims[l + 1];
    specs.push_back({base + ".w", offset, weights});
    offset += weights;
    specs.push_back({base + ".b", offset, static_cast<std::size_t>(dims[l + 1])});
    offset += dims[l + 1];
  }
  return specs;
}

void softmax_inplace(Vec& logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    total += v;
  }
  for (double& v : logits) v /= total;
}

}  // namespace

TaskModel::TaskModel(std::vector<int> dims, std::uint64_t seed) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ConfigError("TaskModel: need input and output dims");
  auto specs = make_layer_specs(dims_);
  const std::size_t total = specs.back().offset + specs.back().length;
  Vec params(total);
  RngStream rng(seed, "model-init");
  for (double& p : params) p = rng.normal(0.0, 0.1);
  params_ = FlatModel(std::move(params), std::move(specs));
}

TaskModel::TaskModel(std::vector<int> dims, FlatModel params) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ConfigError("TaskModel: need input and output dims");
  const auto expected = make_layer_specs(dims_);
  if (params.layers() != expected) {
    throw ShapeError("TaskModel: parameter layout does not match dims");
  }
  params_ = std::move(params);
}

void TaskModel::set_params(FlatModel params) {
  if (!params.same_shape(params_)) throw ShapeError("TaskModel::set_params: layout mismatch");
  params_ = std::move(params);
}

std::size_t TaskModel::weight_offset(int layer) const {
  return params_.layers()[2 * layer].offset;
}

std::size_t TaskModel::bias_offset(int layer) const {
  return params_.layers()[2 * layer + 1].offset;
}

Vec TaskModel::logits(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw ShapeError("TaskModel::logits: input size mismatch");
  }
  Vec h(x.begin(), x.end());
  const int num_layers = static_cast<int>(dims_.size()) - 1;
  const Vec& p = params_.params();
  for (int l = 0; l < num_layers; ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const std::size_t w0 = weight_offset(l);
    const std::size_t b0 = bias_offset(l);
    Vec next(out);
    for (int j = 0; j < out; ++j) next[j] = p[b0 + j];
    for (int i = 0; i < in; ++i) {
      const double hi = h[i];
      const std::size_t row = w0 + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) next[j] += hi * p[row + j];
    }
    if (l + 1 < num_layers) {
      for (double& v : next) v = std::tanh(v);
    }
    h = std::move(next);
  }
  return h;
}

int TaskModel::predict(std::span<const double> x) const {
  const Vec scores = logits(x);
  int best = 0;
  for (int j = 1; j < static_cast<int>(scores.size()); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

double TaskModel::loss(const Dataset& data) const {
  std::vector<int> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  return loss(data, rows);
}

double TaskModel::loss(const Dataset& data, std::span<const int> rows) const {
  if (rows.empty()) throw DataError("TaskModel::loss: no rows");
  double total = 0.0;
  for (int row : rows) {
    Vec probs = logits(data.features.row(row));
    softmax_inplace(probs);
    total += -std::log(std::max(probs[data.labels[row]], 1e-300));
  }
  return total / static_cast<double>(rows.size());
}

FlatModel TaskModel::gradient(const Dataset& data) const {
  std::vector<int> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  return gradient(data, rows);
}

FlatModel TaskModel::gradient(const Dataset& data, std::span<const int> rows) const {
  if (rows.empty()) throw DataError("TaskModel::gradient: no rows");
  FlatModel grad = FlatModel::zeros_like(params_);
  Vec& g = grad.params();
  const Vec& p = params_.params();
  const int num_layers = static_cast<int>(dims_.size()) - 1;

  std::vector<Vec> activations(num_layers + 1);
  for (int row : rows) {
    // Forward pass, keeping post-activation values per layer.
    auto x = data.features.row(row);
    activations[0].assign(x.begin(), x.end());
    for (int l = 0; l < num_layers; ++l) {
      const int in = dims_[l];
      const int out = dims_[l + 1];
      const std::size_t w0 = weight_offset(l);
      const std::size_t b0 = bias_offset(l);
      Vec next(out);
      for (int j = 0; j < out; ++j) next[j] = p[b0 + j];
      for (int i = 0; i < in; ++i) {
        const double hi = activations[l][i];
        const std::size_t wrow = w0 + static_cast<std::size_t>(i) * out;
        for (int j = 0; j < out; ++j) next[j] += hi * p[wrow + j];
      }
      if (l + 1 < num_layers) {
        for (double& v : next) v = std::tanh(v);
      }
      activations[l + 1] = std::move(next);
    }

    // delta at the output: softmax(logits) - onehot(label).
    Vec delta = activations[num_layers];
    softmax_inplace(delta);
    delta[data.labels[row]] -= 1.0;

    for (int l = num_layers - 1; l >= 0; --l) {
      const int in = dims_[l];
      const int out = dims_[l + 1];
      const std::size_t w0 = weight_offset(l);
      const std::size_t b0 = bias_offset(l);
      for (int j = 0; j < out; ++j) g[b0 + j] += delta[j];
      for (int i = 0; i < in; ++i) {
        const double hi = activations[l][i];
        const std::size_t wrow = w0 + static_cast<std::size_t>(i) * out;
        for (int j = 0; j < out; ++j) g[wrow + j] += hi * delta[j];
      }
      if (l > 0) {
        Vec prev(in, 0.0);
        for (int i = 0; i < in; ++i) {
          const std::size_t wrow = w0 + static_cast<std::size_t>(i) * out;
          double acc = 0.0;
          for (int j = 0; j < out; ++j) acc += p[wrow + j] * delta[j];
          const double h = activations[l][i];
          prev[i] = acc * (1.0 - h * h);
        }
        delta = std::move(prev);
      }
    }
  }

  grad.scale(1.0 / static_cast<double>(rows.size()));
  return grad;
}

TrainResult train_local(const TaskModel& model, const Dataset& data,
                        const TrainConfig& cfg, RngStream& rng) {
  if (cfg.learning_rate <= 0.0) throw ConfigError("train_local: learning rate must be positive");
  if (data.size() == 0) return {model.params(), true};

  TaskModel local(model.dims(), model.params());
  const int n = static_cast<int>(data.size());
  const int batch = std::max(1, cfg.batch_size);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += batch) {
      const int end = std::min(start + batch, n);
      std::span<const int> rows(order.data() + start, static_cast<std::size_t>(end - start));
      FlatModel grad = local.gradient(data, rows);
      FlatModel next = local.params();
      next.add_scaled(grad, -cfg.learning_rate);
      local.set_params(std::move(next));
    }
  }
  return {local.params(), false};
}

double evaluate(const TaskModel& model, const Dataset& data) {
  if (data.size() == 0) throw MetricError("evaluate: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.features.row(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace guardfl
