#include "guardfl/defense.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"
#include "guardfl/hdbscan.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

void DefenseConfig::validate() const {
  if (kappa3 <= 0.0) throw ConfigError("defense: kappa3 must be positive");
  if (kappa4 <= 0.0 || kappa4 > 1.0) throw ConfigError("defense: kappa4 must be in (0, 1]");
  if (alpha1 < 0.0 || alpha1 > 100.0 || alpha2 < 0.0 || alpha2 > 100.0) {
    throw ConfigError("defense: percentile levels must be in [0, 100]");
  }
  if (gamma <= 0.0) throw ConfigError("defense: gamma must be positive");
}

Vec init_benign_scores(int total_clients, std::uint64_t seed, double variance) {
  RngStream rng(seed, "benign-scores");
  Vec scores(total_clients);
  const double stddev = std::sqrt(variance);
  for (double& s : scores) s = rng.normal(0.0, stddev);
  return scores;
}

ClusterScores cluster_scores(const Matrix& hard_assign, const Vec& selected_scores,
                             double kappa3) {
  const std::size_t m = hard_assign.rows();
  const std::size_t q = hard_assign.cols();
  if (selected_scores.size() != m) throw ShapeError("cluster_scores: score length mismatch");

  ClusterScores out;
  out.sizes.assign(q, 0);
  out.probs.assign(q, 0.0);
  Vec score_sums(q, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      if (hard_assign(i, j) > 0.0) {
        ++out.sizes[j];
        score_sums[j] += selected_scores[i];
      }
    }
  }

  int nonempty = 0;
  for (std::size_t j = 0; j < q; ++j) {
    if (out.sizes[j] == 0) continue;
    ++nonempty;
    out.probs[j] = kappa3 / static_cast<double>(m) * out.sizes[j] +
                   score_sums[j] / static_cast<double>(out.sizes[j]);
  }
  if (nonempty < 2) {
    out.degenerate = true;
    return out;
  }

  for (std::size_t j = 0; j < q; ++j) {
    if (out.sizes[j] == 0) continue;
    if (out.benign_cluster < 0 || out.probs[j] > out.probs[out.benign_cluster]) {
      out.benign_cluster = static_cast<int>(j);
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    if (out.sizes[j] == 0 || static_cast<int>(j) == out.benign_cluster) continue;
    if (out.malicious_cluster < 0 || out.probs[j] < out.probs[out.malicious_cluster]) {
      out.malicious_cluster = static_cast<int>(j);
    }
  }
  return out;
}

Vec center_distances(const Matrix& latent, const Matrix& hard_assign,
                     const Matrix& centers) {
  const std::size_t m = latent.rows();
  Vec distances(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < hard_assign.cols(); ++j) {
      if (hard_assign(i, j) > 0.0) {
        distances[i] = l2_distance(latent.row(i), centers.row(j));
        break;
      }
    }
  }
  return distances;
}

std::vector<int> filter_benign(const std::vector<int>& benign_members,
                               const Vec& distances, const Vec& selected_scores,
                               double alpha1, double alpha2) {
  if (benign_members.empty()) return {};
  const double score_floor = percentile(selected_scores, alpha1);
  Vec member_distances;
  member_distances.reserve(benign_members.size());
  for (int pos : benign_members) member_distances.push_back(distances[pos]);
  const double distance_ceiling = percentile(member_distances, alpha2);

  std::vector<int> kept;
  for (int pos : benign_members) {
    if (selected_scores[pos] >= score_floor && distances[pos] <= distance_ceiling) {
      kept.push_back(pos);
    }
  }
  return kept;
}

void update_benign_scores(Vec& scores, const std::vector<int>& selected_ids,
                          const std::vector<int>& benign_positions,
                          const std::vector<int>& malicious_positions,
                          const Vec& soft_benign_col, double kappa4) {
  for (int pos : benign_positions) {
    double& s = scores[selected_ids[pos]];
    s += kappa4 * std::abs(s) * soft_benign_col[pos];
  }
  for (int pos : malicious_positions) {
    double& s = scores[selected_ids[pos]];
    s -= kappa4 * std::abs(s);
  }
  for (double& s : scores) s = std::tanh(s);
}

double update_norm_tracker(NormTracker& tracker, const Vec& update_norms) {
  if (update_norms.empty()) throw MetricError("update_norm_tracker: no norms");
  const double median = percentile(update_norms, 50.0);
  tracker.rounds += 1;
  tracker.mean += (median - tracker.mean) / static_cast<double>(tracker.rounds);
  return tracker.mean;
}

FlatModel clip_update(const ClientUpdateRecord& record, const FlatModel& base,
                      double bound) {
  const double norm = l2_norm(record.update.flat());
  FlatModel out = base;
  if (norm == 0.0) return out;
  out.add_scaled(record.update, std::min(1.0, bound / norm));
  return out;
}

namespace {

Vec softmax_over(const Vec& distances, const std::vector<int>& positions,
                 SoftmaxSign sign) {
  Vec logits;
  logits.reserve(positions.size());
  for (int pos : positions) {
    logits.push_back(sign == SoftmaxSign::as_written ? distances[pos] : -distances[pos]);
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    total += v;
  }
  for (double& v : logits) v /= total;
  return logits;
}

FlatModel weighted_aggregate(const std::vector<FlatModel>& clipped,
                             const std::vector<int>& positions, const Vec& weights,
                             const FlatModel& base) {
  FlatModel out = base;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    FlatModel delta = subtract(clipped[positions[k]], base);
    out.add_scaled(delta, weights[k]);
  }
  return out;
}

}  // namespace

FlatModel aggregate_and_eliminate(const std::vector<FlatModel>& clipped,
                                  const std::vector<int>& benign_positions,
                                  const std::vector<int>& malicious_positions,
                                  const Vec& distances, const Vec& selected_scores,
                                  const FlatModel& base, double norm_bound,
                                  double gamma, bool ape_enabled,
                                  SoftmaxSign softmax_sign) {
  if (benign_positions.empty()) {
    throw AggregationError("aggregate_and_eliminate: empty benign set");
  }
  const Vec benign_weights = softmax_over(distances, benign_positions, softmax_sign);
  FlatModel benign_global =
      weighted_aggregate(clipped, benign_positions, benign_weights, base);

  if (!ape_enabled || malicious_positions.empty()) return benign_global;

  const Vec malicious_weights = softmax_over(distances, malicious_positions, softmax_sign);
  FlatModel malicious_global =
      weighted_aggregate(clipped, malicious_positions, malicious_weights, base);

  // Limit the malicious aggregate's update magnitude to the benign one's.
  const double benign_mag = l2_distance(benign_global, base);
  const double malicious_mag = l2_distance(malicious_global, base);
  FlatModel limited = base;
  if (malicious_mag > 0.0) {
    FlatModel delta = subtract(malicious_global, base);
    limited.add_scaled(delta, std::min(1.0, benign_mag / malicious_mag));
  }

  double selected_mass = 0.0;
  for (double s : selected_scores) selected_mass += std::abs(s);
  double malicious_mass = 0.0;
  for (int pos : malicious_positions) malicious_mass += std::abs(selected_scores[pos]);
  const double mass_ratio = selected_mass > 0.0 ? malicious_mass / selected_mass : 0.0;

  FlatModel divergence = subtract(benign_global, limited);
  FlatModel out = benign_global;
  out.add_scaled(divergence, gamma * mass_ratio * std::log1p(norm_bound));
  return out;
}

DefenseOutcome defend_round(const std::vector<ClientUpdateRecord>& records,
                            const FlatModel& broadcast_model, int total_clients,
                            GraphState& graph, Vec& scores, NormTracker& tracker,
                            const DefenseConfig& cfg, const GaeConfig& gae_cfg,
                            int round, std::uint64_t seed) {
  cfg.validate();
  if (records.size() < 2) throw GraphError("defend_round: need at least 2 records");

  // Graph construction and momentum smoothing over the full client set.
  const Matrix x_new = build_feature_matrix(records, broadcast_model, total_clients);
  const Matrix e_new = build_adjacency(records, total_clients, cfg.edge_transform);
  smooth_graph(graph, x_new, e_new);

  std::vector<int> selected_ids;
  selected_ids.reserve(records.size());
  for (const auto& r : records) selected_ids.push_back(r.client_id);
  std::sort(selected_ids.begin(), selected_ids.end());
  const SubGraph sub = subgraph_extract(graph.features, graph.adjacency, selected_ids);

  // Records aligned with sub-graph row order.
  std::vector<const ClientUpdateRecord*> by_position(records.size());
  for (const auto& r : records) {
    const auto it = std::lower_bound(selected_ids.begin(), selected_ids.end(), r.client_id);
    by_position[it - selected_ids.begin()] = &r;
  }

  const int num_clusters = estimate_num_clusters(sub.features);
  RngStream gae_rng(seed, "gae-fit", static_cast<std::uint64_t>(round));
  const GaeState gae_state = fit_gae(sub, num_clusters, gae_cfg, gae_rng);

  Vec selected_scores;
  selected_scores.reserve(selected_ids.size());
  for (int id : selected_ids) selected_scores.push_back(scores[id]);

  const ClusterScores verdict =
      cluster_scores(gae_state.hard_assign, selected_scores, cfg.kappa3);

  DefenseOutcome outcome;
  outcome.latent = gae_state.latent;
  outcome.soft_assign = gae_state.soft_assign;
  outcome.centers = gae_state.centers;
  outcome.diagnostics.num_clusters = num_clusters;
  outcome.diagnostics.cluster_sizes = verdict.sizes;
  outcome.diagnostics.cluster_probs = verdict.probs;
  outcome.diagnostics.benign_cluster = verdict.benign_cluster;
  outcome.diagnostics.malicious_cluster = verdict.malicious_cluster;

  std::vector<int> benign_kept;
  std::vector<int> malicious_positions;
  Vec distances;
  bool degenerate = verdict.degenerate;
  if (!degenerate) {
    distances = center_distances(gae_state.latent, gae_state.hard_assign,
                                 gae_state.centers);
    std::vector<int> benign_members;
    for (std::size_t i = 0; i < selected_ids.size(); ++i) {
      if (gae_state.hard_assign(i, verdict.benign_cluster) > 0.0) {
        benign_members.push_back(static_cast<int>(i));
      }
      if (gae_state.hard_assign(i, verdict.malicious_cluster) > 0.0) {
        malicious_positions.push_back(static_cast<int>(i));
      }
    }
    benign_kept = filter_benign(benign_members, distances, selected_scores,
                                cfg.alpha1, cfg.alpha2);
    degenerate = benign_kept.empty();
  }

  if (!degenerate) {
    Vec soft_benign_col(selected_ids.size());
    for (std::size_t i = 0; i < selected_ids.size(); ++i) {
      soft_benign_col[i] = gae_state.soft_assign(i, verdict.benign_cluster);
    }
    update_benign_scores(scores, selected_ids, benign_kept, malicious_positions,
                         soft_benign_col, cfg.kappa4);
  }

  Vec update_norms;
  update_norms.reserve(by_position.size());
  for (const auto* r : by_position) update_norms.push_back(l2_norm(r->update.flat()));
  outcome.diagnostics.median_norm = percentile(update_norms, 50.0);
  const double norm_bound = update_norm_tracker(tracker, update_norms);
  outcome.diagnostics.norm_bound = norm_bound;

  std::vector<FlatModel> clipped;
  clipped.reserve(by_position.size());
  for (const auto* r : by_position) {
    clipped.push_back(clip_update(*r, broadcast_model, norm_bound));
  }

  if (degenerate) {
    // Fail-safe: clipped federated averaging, scores untouched.
    std::vector<ClientUpdateRecord> clipped_records;
    clipped_records.reserve(by_position.size());
    for (std::size_t i = 0; i < by_position.size(); ++i) {
      ClientUpdateRecord r;
      r.client_id = by_position[i]->client_id;
      r.weights = clipped[i];
      r.sample_count = by_position[i]->sample_count;
      clipped_records.push_back(std::move(r));
    }
    outcome.global = fedavg_aggregate(clipped_records);
    outcome.diagnostics.degenerate = true;
    return outcome;
  }

  // Refreshed scores feed the elimination mass ratio.
  for (std::size_t i = 0; i < selected_ids.size(); ++i) {
    selected_scores[i] = scores[selected_ids[i]];
  }
  outcome.global = aggregate_and_eliminate(clipped, benign_kept, malicious_positions,
                                           distances, selected_scores, broadcast_model,
                                           norm_bound, cfg.gamma, cfg.ape_enabled,
                                           cfg.softmax_sign);
  for (int pos : benign_kept) outcome.detected_benign.push_back(selected_ids[pos]);
  for (int pos : malicious_positions) {
    outcome.detected_malicious.push_back(selected_ids[pos]);
  }
  return outcome;
}

}  // namespace guardfl
