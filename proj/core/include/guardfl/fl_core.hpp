#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "guardfl/flat_model.hpp"

namespace guardfl {

enum class DefenseKind { none, guardfl, krum, multi_krum, ndc, weak_dp };

struct SimConfig {
  int total_clients = 200;
  int clients_per_round = 10;
  int max_rounds = 600;
  int local_epochs = 2;
  std::uint64_t seed = 1;
  double pmr = 0.25;
  DefenseKind defense = DefenseKind::none;

  void validate() const;
  // ids [0, floor(pmr * total_clients)) are the compromised population.
  int num_malicious() const;

  bool operator==(const SimConfig&) const = default;
};

struct ClientUpdateRecord {
  int client_id = 0;
  FlatModel weights;      // W submitted this round
  FlatModel update;       // W - broadcast model
  FlatModel prev_update;  // last round's update, or the substitution value
  std::size_t sample_count = 0;
};

// Exactly m distinct ids drawn uniformly without replacement, ascending.
// Deterministic for a fixed (seed, round).
std::vector<int> select_clients(std::uint64_t seed, int round, int m, int total_clients);

// update = w - g_current; prev_update = prev_w - g_prev when the client
// participated last round, else g_current - g_prev.
ClientUpdateRecord compute_updates(FlatModel w, const FlatModel& g_current,
                                   const std::optional<FlatModel>& prev_w,
                                   const FlatModel& g_prev, int client_id,
                                   std::size_t sample_count);

// Sample-count weighted average of client weights; reduction in ascending
// client id regardless of input order.
FlatModel fedavg_aggregate(const std::vector<ClientUpdateRecord>& records);

}  // namespace guardfl
