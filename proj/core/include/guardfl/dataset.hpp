#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guardfl/linalg.hpp"

namespace guardfl {

struct Dataset {
  Matrix features;          // samples x feature_dim
  std::vector<int> labels;  // values in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
};

struct PartitionSpec {
  enum class Kind { uniform, dirichlet };
  Kind kind = Kind::uniform;
  double alpha = 1.0;  // dirichlet concentration, > 0

  bool operator==(const PartitionSpec&) const = default;
};

// Gaussian class blobs: class c is centred at separation * e_{c mod dim}
// (sign flipped on every wrap) with isotropic noise. Deterministic under
// the seed.
Dataset gen_synthetic(int classes, int per_class, int feature_dim,
                      std::uint64_t seed, double separation = 3.0,
                      double noise = 1.0);

// Splits a dataset across num_clients shards without loss or duplication.
// uniform: shard sizes differ by at most one. dirichlet: per-label client
// proportions drawn once per label from Dir(alpha); empty shards allowed.
std::vector<Dataset> partition(const Dataset& data, int num_clients,
                               const PartitionSpec& spec, std::uint64_t seed);

// CSV import: feature columns followed by a trailing integer label column.
Dataset load_csv_dataset(const std::string& path);

}  // namespace guardfl
