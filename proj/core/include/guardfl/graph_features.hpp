#pragma once

#include <span>
#include <vector>

#include "guardfl/fl_core.hpp"
#include "guardfl/linalg.hpp"

namespace guardfl {

// Statistical dispersion measures applied to weight/update vectors. cos is
// the only pairwise one; the other nine are the scalar measures used for
// feature columns, in this fixed order.
enum class DispersionMeasure { cos, norm, min, max, mean, std, sum, median, p5, p95 };

inline constexpr int kScalarMeasures = 9;
inline constexpr int kModelWiseFeatures = 19;   // 9 + 9 + 1
inline constexpr int kLayerWiseFeatures = 29;   // per layer: 9 + 9 + 1 + 1 + 9

double dispersion(DispersionMeasure measure, std::span<const double> v);
double dispersion_cos(std::span<const double> v, std::span<const double> u);

// Linear-interpolation percentile (inclusive): rank = pct/100 * (n - 1) on
// the sorted values.
double percentile(std::vector<double> values, double pct);

// 9 scalar measures of w, 9 of dw, then cos(w, g).
Vec model_wise_features(std::span<const double> w, std::span<const double> dw,
                        std::span<const double> g);

// Per layer: 9 measures of w_l, 9 of dw_l, cos(w_l, g_l),
// cos(dw_l, prev_dw_l), 9 measures of (dw_l - prev_dw_l); layers
// concatenated in order.
Vec layer_wise_features(const std::vector<std::span<const double>>& w_layers,
                        const std::vector<std::span<const double>>& dw_layers,
                        const std::vector<std::span<const double>>& prev_dw_layers,
                        const std::vector<std::span<const double>>& g_layers);

enum class EdgeTransform { literal, complement };

// Participant rows hold the z-scored concatenation of model-wise and
// layer-wise features; non-participant rows are all zero.
Matrix build_feature_matrix(const std::vector<ClientUpdateRecord>& records,
                            const FlatModel& global_model, int total_clients);

// Fused adjacency over all clients: cosine-, weight-norm- and update-norm-
// based relations, z-scored over the participant block, norm-based ones
// negated, transformed, averaged, and zeroed outside the participant block.
Matrix build_adjacency(const std::vector<ClientUpdateRecord>& records,
                       int total_clients,
                       EdgeTransform transform = EdgeTransform::literal);

struct GraphState {
  Matrix features;   // smoothed M x (d1 + d2)
  Matrix adjacency;  // smoothed M x M
  double kappa1 = 0.1;
  double kappa2 = 0.1;
};

// Momentum smoothing: X = (1-k1) X_prev + k1 X_new (same for E); the state
// keeps the smoothed matrices for the next round. First call just scales
// the new matrices, with empty history treated as zero.
void smooth_graph(GraphState& state, const Matrix& x_new, const Matrix& e_new);

}  // namespace guardfl
