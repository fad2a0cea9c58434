#include "guardfl/fl_core.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

void SimConfig::validate() const {
  if (total_clients < 1) throw ConfigError("sim: total_clients must be >= 1");
  if (clients_per_round < 1 || clients_per_round > total_clients) {
    throw ConfigError("sim: need 1 <= clients_per_round <= total_clients");
  }
  if (max_rounds < 1) throw ConfigError("sim: max_rounds must be >= 1");
  if (local_epochs < 0) throw ConfigError("sim: local_epochs must be >= 0");
  if (pmr < 0.0 || pmr > 0.55) throw ConfigError("sim: pmr must be in [0, 0.55]");
}

int SimConfig::num_malicious() const {
  return static_cast<int>(std::floor(pmr * total_clients));
}

std::vector<int> select_clients(std::uint64_t seed, int round, int m, int total_clients) {
  if (m > total_clients) throw ConfigError("select_clients: m exceeds total clients");
  RngStream rng(seed, "client-selection", static_cast<std::uint64_t>(round));
  return rng.sample_without_replacement(total_clients, m);
}

ClientUpdateRecord compute_updates(FlatModel w, const FlatModel& g_current,
                                   const std::optional<FlatModel>& prev_w,
                                   const FlatModel& g_prev, int client_id,
                                   std::size_t sample_count) {
  if (!w.same_shape(g_current) || !g_current.same_shape(g_prev)) {
    throw ShapeError("compute_updates: layer specs differ");
  }
  ClientUpdateRecord record;
  record.client_id = client_id;
  record.update = subtract(w, g_current);
  record.prev_update = prev_w.has_value() ? subtract(*prev_w, g_prev)
                                          : subtract(g_current, g_prev);
  record.weights = std::move(w);
  record.sample_count = sample_count;
  return record;
}

FlatModel fedavg_aggregate(const std::vector<ClientUpdateRecord>& records) {
  if (records.empty()) throw AggregationError("fedavg_aggregate: no records");
  std::vector<const ClientUpdateRecord*> ordered;
  ordered.reserve(records.size());
  for (const auto& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  double total = 0.0;
  for (const auto* r : ordered) total += static_cast<double>(r->sample_count);

  FlatModel out = FlatModel::zeros_like(ordered.front()->weights);
  for (const auto* r : ordered) {
    // All-empty shards degrade to an unweighted mean.
    const double weight = total > 0.0 ? static_cast<double>(r->sample_count) / total
                                      : 1.0 / static_cast<double>(ordered.size());
    out.add_scaled(r->weights, weight);
  }
  return out;
}

}  // namespace guardfl
