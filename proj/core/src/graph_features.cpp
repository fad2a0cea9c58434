#include "guardfl/graph_features.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"

namespace guardfl {

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw MetricError("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double dispersion(DispersionMeasure measure, std::span<const double> v) {
  if (v.empty()) throw MetricError("dispersion: empty vector");
  switch (measure) {
    case DispersionMeasure::cos:
      throw MetricError("dispersion: cos needs two vectors");
    case DispersionMeasure::norm:
      return l2_norm(v);
    case DispersionMeasure::min:
      return *std::min_element(v.begin(), v.end());
    case DispersionMeasure::max:
      return *std::max_element(v.begin(), v.end());
    case DispersionMeasure::mean: {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / static_cast<double>(v.size());
    }
    case DispersionMeasure::std: {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      return std::sqrt(var / static_cast<double>(v.size()));
    }
    case DispersionMeasure::sum: {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc;
    }
    case DispersionMeasure::median:
      return percentile({v.begin(), v.end()}, 50.0);
    case DispersionMeasure::p5:
      return percentile({v.begin(), v.end()}, 5.0);
    case DispersionMeasure::p95:
      return percentile({v.begin(), v.end()}, 95.0);
  }
  throw MetricError("dispersion: unknown measure");
}

double dispersion_cos(std::span<const double> v, std::span<const double> u) {
  if (v.empty() || u.empty()) throw MetricError("dispersion_cos: empty vector");
  return cosine(v, u);
}

namespace {

constexpr DispersionMeasure kScalarOrder[kScalarMeasures] = {
    DispersionMeasure::norm, DispersionMeasure::min,    DispersionMeasure::max,
    DispersionMeasure::mean, DispersionMeasure::std,    DispersionMeasure::sum,
    DispersionMeasure::median, DispersionMeasure::p5,   DispersionMeasure::p95,
};

void append_scalar_measures(Vec& out, std::span<const double> v) {
  for (DispersionMeasure m : kScalarOrder) out.push_back(dispersion(m, v));
}

}  // namespace

Vec model_wise_features(std::span<const double> w, std::span<const double> dw,
                        std::span<const double> g) {
  if (w.size() != dw.size() || w.size() != g.size()) {
    throw ShapeError("model_wise_features: vector lengths differ");
  }
  Vec out;
  out.reserve(kModelWiseFeatures);
  append_scalar_measures(out, w);
  append_scalar_measures(out, dw);
  out.push_back(dispersion_cos(w, g));
  return out;
}

Vec layer_wise_features(const std::vector<std::span<const double>>& w_layers,
                        const std::vector<std::span<const double>>& dw_layers,
                        const std::vector<std::span<const double>>& prev_dw_layers,
                        const std::vector<std::span<const double>>& g_layers) {
  const std::size_t num_layers = w_layers.size();
  if (dw_layers.size() != num_layers || prev_dw_layers.size() != num_layers ||
      g_layers.size() != num_layers) {
    throw ShapeError("layer_wise_features: layer counts differ");
  }
  Vec out;
  out.reserve(kLayerWiseFeatures * num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    if (w_layers[l].size() != dw_layers[l].size() ||
        w_layers[l].size() != prev_dw_layers[l].size() ||
        w_layers[l].size() != g_layers[l].size()) {
      throw ShapeError("layer_wise_features: layer lengths differ");
    }
    append_scalar_measures(out, w_layers[l]);
    append_scalar_measures(out, dw_layers[l]);
    out.push_back(dispersion_cos(w_layers[l], g_layers[l]));
    out.push_back(dispersion_cos(dw_layers[l], prev_dw_layers[l]));
    Vec diff(w_layers[l].size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = dw_layers[l][i] - prev_dw_layers[l][i];
    }
    append_scalar_measures(out, diff);
  }
  return out;
}

namespace {

std::vector<const ClientUpdateRecord*> sorted_participants(
    const std::vector<ClientUpdateRecord>& records) {
  std::vector<const ClientUpdateRecord*> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->client_id < b->client_id; });
  return out;
}

std::vector<std::span<const double>> grouped_views(const FlatModel& model) {
  std::vector<std::span<const double>> views;
  for (const LayerSpec& group : model.grouped_layers()) {
    views.push_back({model.params().data() + group.offset, group.length});
  }
  return views;
}

// Column-wise z-score over the first `count` rows; zero-variance columns
// become all zeros.
void zscore_columns(Matrix& m, std::size_t count) {
  if (count == 0) return;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += m(i, j);
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      var += (m(i, j) - mean) * (m(i, j) - mean);
    }
    const double stddev = std::sqrt(var / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
      m(i, j) = stddev > 0.0 ? (m(i, j) - mean) / stddev : 0.0;
    }
  }
}

// Z-score an m x m relation matrix in place over all entries, or over the
// off-diagonal entries only (stats excluding the structural zeros on the
// diagonal); zero variance maps everything to zero.
void zscore_relations(Matrix& e, bool exclude_diagonal) {
  const std::size_t n = e.rows();
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (exclude_diagonal && i == j) continue;
      mean += e(i, j);
      ++count;
    }
  }
  if (count == 0) {
    e.fill(0.0);
    return;
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (exclude_diagonal && i == j) continue;
      var += (e(i, j) - mean) * (e(i, j) - mean);
    }
  }
  const double stddev = std::sqrt(var / static_cast<double>(count));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      e(i, j) = stddev > 0.0 ? (e(i, j) - mean) / stddev : 0.0;
    }
  }
}

void transform_relations(Matrix& e, EdgeTransform transform) {
  for (double& x : e.data()) {
    const double clipped = std::max(x, 0.0);
    const double literal = std::exp(-std::tanh(clipped));
    x = transform == EdgeTransform::literal ? literal : 1.0 - literal;
  }
}

}  // namespace

Matrix build_feature_matrix(const std::vector<ClientUpdateRecord>& records,
                            const FlatModel& global_model, int total_clients) {
  if (records.empty()) throw GraphError("build_feature_matrix: no participants");
  const auto participants = sorted_participants(records);
  const std::size_t num_groups = global_model.grouped_layers().size();
  const std::size_t cols = kModelWiseFeatures + kLayerWiseFeatures * num_groups;

  Matrix block(participants.size(), cols);
  const auto g_layers = grouped_views(global_model);
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const ClientUpdateRecord& r = *participants[i];
    const Vec model_wise = model_wise_features(r.weights.flat(), r.update.flat(),
                                               global_model.flat());
    const Vec layer_wise = layer_wise_features(grouped_views(r.weights),
                                               grouped_views(r.update),
                                               grouped_views(r.prev_update), g_layers);
    auto row = block.row(i);
    std::copy(model_wise.begin(), model_wise.end(), row.begin());
    std::copy(layer_wise.begin(), layer_wise.end(), row.begin() + kModelWiseFeatures);
  }
  zscore_columns(block, participants.size());

  Matrix full(total_clients, cols);
  for (std::size_t i = 0; i < participants.size(); ++i) {
    auto src = block.row(i);
    auto dst = full.row(participants[i]->client_id);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return full;
}

Matrix build_adjacency(const std::vector<ClientUpdateRecord>& records,
                       int total_clients, EdgeTransform transform) {
  if (records.size() < 2) throw GraphError("build_adjacency: need at least 2 participants");
  const auto participants = sorted_participants(records);
  const std::size_t m = participants.size();

  Vec weight_norms(m), update_norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    weight_norms[i] = l2_norm(participants[i]->weights.flat());
    update_norms[i] = l2_norm(participants[i]->update.flat());
  }

  Matrix e1(m, m), e2(m, m), e3(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    e1(i, i) = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double c = cosine(participants[i]->weights.flat(), participants[j]->weights.flat());
      e1(i, j) = e1(j, i) = (1.0 + c) / 2.0;
      e2(i, j) = e2(j, i) = std::abs(weight_norms[i] - weight_norms[j]);
      e3(i, j) = e3(j, i) = std::abs(update_norms[i] - update_norms[j]);
    }
  }

  zscore_relations(e1, /*exclude_diagonal=*/false);
  zscore_relations(e2, /*exclude_diagonal=*/true);
  zscore_relations(e3, /*exclude_diagonal=*/true);
  // Smaller norm gaps mean closer clients, the opposite sense of the
  // cosine relation, hence the sign flip.
  for (double& x : e2.data()) x = -x;
  for (double& x : e3.data()) x = -x;
  transform_relations(e1, transform);
  transform_relations(e2, transform);
  transform_relations(e3, transform);

  Matrix full(total_clients, total_clients);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double fused = (e1(i, j) + e2(i, j) + e3(i, j)) / 3.0;
      full(participants[i]->client_id, participants[j]->client_id) = fused;
    }
  }
  return full;
}

void smooth_graph(GraphState& state, const Matrix& x_new, const Matrix& e_new) {
  if (state.features.empty()) state.features = Matrix(x_new.rows(), x_new.cols());
  if (state.adjacency.empty()) state.adjacency = Matrix(e_new.rows(), e_new.cols());
  if (state.features.rows() != x_new.rows() || state.features.cols() != x_new.cols() ||
      state.adjacency.rows() != e_new.rows() || state.adjacency.cols() != e_new.cols()) {
    throw ShapeError("smooth_graph: shape mismatch with previous round");
  }
  for (std::size_t i = 0; i < state.features.data().size(); ++i) {
    state.features.data()[i] =
        (1.0 - state.kappa1) * state.features.data()[i] + state.kappa1 * x_new.data()[i];
  }
  for (std::size_t i = 0; i < state.adjacency.data().size(); ++i) {
    state.adjacency.data()[i] =
        (1.0 - state.kappa2) * state.adjacency.data()[i] + state.kappa2 * e_new.data()[i];
  }
}

}  // namespace guardfl
