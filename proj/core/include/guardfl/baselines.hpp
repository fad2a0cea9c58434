#pragma once

#include <cstdint>
#include <vector>

#include "guardfl/fl_core.hpp"
#include "guardfl/flat_model.hpp"

namespace guardfl {

struct BaselineConfig {
  int krum_f = 2;               // tolerated malicious count, < m/2
  double ndc_threshold = 2.0;   // update-norm clip bound, > 0
  double weak_dp_sigma = 0.025; // per-coordinate noise stddev, >= 0

  void validate(int clients_per_round) const;

  bool operator==(const BaselineConfig&) const = default;
};

// Index of the model with the smallest sum of squared distances to its
// n - f - 2 nearest peers; ties resolve to the lowest index. Requires
// n > 2f + 2.
std::size_t krum_select(const std::vector<FlatModel>& models, int f);

// Unweighted mean of the n - f best-scoring models.
FlatModel multi_krum_aggregate(const std::vector<FlatModel>& models, int f);

// Per-client update clipped to the threshold, then federated averaging.
FlatModel ndc_clip_aggregate(const std::vector<ClientUpdateRecord>& records,
                             const FlatModel& base, double threshold);

// Federated averaging plus seeded i.i.d. Gaussian noise per coordinate.
FlatModel weak_dp_aggregate(const std::vector<ClientUpdateRecord>& records,
                            double sigma, std::uint64_t seed, int round);

}  // namespace guardfl
