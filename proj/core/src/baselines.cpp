#include "guardfl/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

void BaselineConfig::validate(int clients_per_round) const {
  if (krum_f < 0 || 2 * krum_f >= clients_per_round) {
    throw ConfigError("baseline: krum_f must satisfy f < m/2");
  }
  if (ndc_threshold <= 0.0) throw ConfigError("baseline: ndc_threshold must be positive");
  if (weak_dp_sigma < 0.0) throw ConfigError("baseline: weak_dp_sigma must be >= 0");
}

namespace {

Vec krum_scores(const std::vector<FlatModel>& models, int f) {
  const int n = static_cast<int>(models.size());
  if (n <= 2 * f + 2) throw ConfigError("krum: need more than 2f + 2 models");

  Matrix sq_dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = l2_distance(models[i], models[j]);
      sq_dist(i, j) = sq_dist(j, i) = d * d;
    }
  }

  const int neighbors = n - f - 2;
  Vec scores(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Vec others;
    others.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(sq_dist(i, j));
    }
    std::sort(others.begin(), others.end());
    for (int k = 0; k < neighbors; ++k) scores[i] += others[k];
  }
  return scores;
}

}  // namespace

std::size_t krum_select(const std::vector<FlatModel>& models, int f) {
  const Vec scores = krum_scores(models, f);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

FlatModel multi_krum_aggregate(const std::vector<FlatModel>& models, int f) {
  const Vec scores = krum_scores(models, f);
  std::vector<std::size_t> order(models.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const std::size_t keep = models.size() - static_cast<std::size_t>(f);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + keep);
  std::sort(chosen.begin(), chosen.end());

  FlatModel out = FlatModel::zeros_like(models.front());
  for (std::size_t idx : chosen) {
    out.add_scaled(models[idx], 1.0 / static_cast<double>(keep));
  }
  return out;
}

FlatModel ndc_clip_aggregate(const std::vector<ClientUpdateRecord>& records,
                             const FlatModel& base, double threshold) {
  if (threshold <= 0.0) throw ConfigError("ndc_clip_aggregate: threshold must be positive");
  std::vector<ClientUpdateRecord> clipped;
  clipped.reserve(records.size());
  for (const auto& r : records) {
    ClientUpdateRecord c;
    c.client_id = r.client_id;
    c.sample_count = r.sample_count;
    const double norm = l2_norm(r.update.flat());
    c.weights = base;
    if (norm > 0.0) {
      c.weights.add_scaled(r.update, std::min(1.0, threshold / norm));
    }
    clipped.push_back(std::move(c));
  }
  return fedavg_aggregate(clipped);
}

FlatModel weak_dp_aggregate(const std::vector<ClientUpdateRecord>& records,
                            double sigma, std::uint64_t seed, int round) {
  if (sigma < 0.0) throw ConfigError("weak_dp_aggregate: sigma must be >= 0");
  FlatModel out = fedavg_aggregate(records);
  if (sigma == 0.0) return out;
  RngStream rng(seed, "weak-dp", static_cast<std::uint64_t>(round));
  for (double& p : out.params()) p += rng.normal(0.0, sigma);
  return out;
}

}  // namespace guardfl
