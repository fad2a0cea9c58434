#pragma once

#include <cstdint>
#include <vector>

#include "guardfl/fl_core.hpp"
#include "guardfl/gae.hpp"
#include "guardfl/graph_features.hpp"
#include "guardfl/linalg.hpp"

namespace guardfl {

enum class SoftmaxSign { as_written, negated };

struct DefenseConfig {
  double kappa3 = 0.3;   // cluster-size weight in the cluster score
  double kappa4 = 0.5;   // benign-score update factor, in (0, 1]
  double alpha1 = 25.0;  // score percentile level
  double alpha2 = 75.0;  // distance percentile level
  double gamma = 0.01;   // poison-elimination strength
  bool ape_enabled = true;
  SoftmaxSign softmax_sign = SoftmaxSign::as_written;
  EdgeTransform edge_transform = EdgeTransform::literal;

  void validate() const;

  bool operator==(const DefenseConfig&) const = default;
};

// Seeded N(0, variance) initialization of the per-client benign scores.
Vec init_benign_scores(int total_clients, std::uint64_t seed,
                       double variance = 1e-3);

struct ClusterScores {
  Vec probs;                      // per-cluster score, 0 for empty clusters
  std::vector<int> sizes;         // per-cluster member counts
  int benign_cluster = -1;        // argmax over nonempty clusters
  int malicious_cluster = -1;     // argmin over nonempty clusters
  bool degenerate = false;        // fewer than two nonempty clusters
};

// Per-cluster probability of being benign: (kappa3 / m) * size + mean
// member score. Empty clusters are excluded; ties resolve to the lowest
// index, with the malicious pick moved off the benign one on collision.
ClusterScores cluster_scores(const Matrix& hard_assign, const Vec& selected_scores,
                             double kappa3);

// Distance of each selected client's embedding to its assigned center.
Vec center_distances(const Matrix& latent, const Matrix& hard_assign,
                     const Matrix& centers);

// Members of the benign cluster whose score reaches the alpha1 percentile
// of all selected scores and whose distance stays within the alpha2
// percentile of the benign cluster's distances. Returns positions.
std::vector<int> filter_benign(const std::vector<int>& benign_members,
                               const Vec& distances, const Vec& selected_scores,
                               double alpha1, double alpha2);

// Score update for the filtered benign and the malicious sets, then tanh
// over the whole score vector. `soft_benign_col` is the soft-assignment
// column of the benign cluster, indexed by position.
void update_benign_scores(Vec& scores, const std::vector<int>& selected_ids,
                          const std::vector<int>& benign_positions,
                          const std::vector<int>& malicious_positions,
                          const Vec& soft_benign_col, double kappa4);

struct NormTracker {
  double mean = 0.0;  // running mean of per-round median update norms
  int rounds = 0;
};

// Feeds this round's update norms; returns the updated running mean.
double update_norm_tracker(NormTracker& tracker, const Vec& update_norms);

// base + update * min(1, bound / ||update||); ||update|| = 0 yields base.
FlatModel clip_update(const ClientUpdateRecord& record, const FlatModel& base,
                      double bound);

// Dual aggregation with malicious-magnitude limiting and divergence
// amplification. Positions index into `clipped`/`distances`; the selected
// scores are the current per-selected-client scores.
FlatModel aggregate_and_eliminate(const std::vector<FlatModel>& clipped,
                                  const std::vector<int>& benign_positions,
                                  const std::vector<int>& malicious_positions,
                                  const Vec& distances, const Vec& selected_scores,
                                  const FlatModel& base, double norm_bound,
                                  double gamma, bool ape_enabled,
                                  SoftmaxSign softmax_sign);

struct DefenseDiagnostics {
  int num_clusters = 0;
  std::vector<int> cluster_sizes;
  Vec cluster_probs;
  int benign_cluster = -1;
  int malicious_cluster = -1;
  double median_norm = 0.0;
  double norm_bound = 0.0;
  bool degenerate = false;
};

struct DefenseOutcome {
  FlatModel global;
  std::vector<int> detected_malicious;  // client ids
  std::vector<int> detected_benign;     // client ids
  DefenseDiagnostics diagnostics;
  // Clustering artifacts for optional per-round dumps.
  Matrix latent;
  Matrix soft_assign;
  Matrix centers;
};

// One full server-side defense step: graph build + smoothing, sub-graph
// clustering, verdicts, score bookkeeping, clipping, and aggregation.
// Degenerate rounds fall back to clipped federated averaging with no score
// update. Mutates the persistent graph/scores/tracker state.
DefenseOutcome defend_round(const std::vector<ClientUpdateRecord>& records,
                            const FlatModel& broadcast_model, int total_clients,
                            GraphState& graph, Vec& scores, NormTracker& tracker,
                            const DefenseConfig& cfg, const GaeConfig& gae_cfg,
                            int round, std::uint64_t seed);

}  // namespace guardfl
