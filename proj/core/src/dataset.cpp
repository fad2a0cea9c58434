#include "guardfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "guardfl/errors.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

Dataset gen_synthetic(int classes, int per_class, int feature_dim,
                      std::uint64_t seed, double separation, double noise) {
  if (classes < 2) throw ConfigError("gen_synthetic: need at least 2 classes");
  if (per_class <= 0) throw DataError("gen_synthetic: per_class must be positive");
  if (feature_dim <= 0) throw ConfigError("gen_synthetic: feature_dim must be positive");

  const int n = classes * per_class;
  Dataset out;
  out.features = Matrix(n, feature_dim);
  out.labels.resize(n);
  out.num_classes = classes;

  RngStream rng(seed, "synthetic-data");
  int row = 0;
  for (int c = 0; c < classes; ++c) {
    const int axis = c % feature_dim;
    const double sign = (c / feature_dim) % 2 == 0 ? 1.0 : -1.0;
    for (int s = 0; s < per_class; ++s, ++row) {
      auto features = out.features.row(row);
      for (int d = 0; d < feature_dim; ++d) features[d] = noise * rng.normal();
      features[axis] += sign * separation;
      out.labels[row] = c;
    }
  }
  return out;
}

namespace {

std::vector<Dataset> make_empty_shards(const Dataset& data, int num_clients) {
  std::vector<Dataset> shards(num_clients);
  for (Dataset& shard : shards) {
    shard.features = Matrix(0, data.feature_dim());
    shard.num_classes = data.num_classes;
  }
  return shards;
}

void assign_rows(const Dataset& data, const std::vector<std::vector<int>>& rows_per_client,
                 std::vector<Dataset>& shards) {
  for (std::size_t c = 0; c < shards.size(); ++c) {
    const auto& rows = rows_per_client[c];
    shards[c].features = Matrix(rows.size(), data.feature_dim());
    shards[c].labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = shards[c].features.row(i);
      auto src = data.features.row(rows[i]);
      std::copy(src.begin(), src.end(), dst.begin());
      shards[c].labels[i] = data.labels[rows[i]];
    }
  }
}

}  // namespace

std::vector<Dataset> partition(const Dataset& data, int num_clients,
                               const PartitionSpec& spec, std::uint64_t seed) {
  if (num_clients < 1) throw ConfigError("partition: need at least one client");
  if (spec.kind == PartitionSpec::Kind::dirichlet && spec.alpha <= 0.0) {
    throw ConfigError("partition: dirichlet alpha must be positive");
  }

  std::vector<Dataset> shards = make_empty_shards(data, num_clients);
  std::vector<std::vector<int>> rows_per_client(num_clients);
  const int n = static_cast<int>(data.size());

  if (spec.kind == PartitionSpec::Kind::uniform) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    RngStream rng(seed, "partition-uniform");
    rng.shuffle(order);
    const int base = num_clients > 0 ? n / num_clients : 0;
    const int extra = n % num_clients;
    int cursor = 0;
    for (int c = 0; c < num_clients; ++c) {
      const int take = base + (c < extra ? 1 : 0);
      for (int i = 0; i < take; ++i) rows_per_client[c].push_back(order[cursor++]);
    }
  } else {
    for (int label = 0; label < data.num_classes; ++label) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i) {
        if (data.labels[i] == label) rows.push_back(i);
      }
      if (rows.empty()) continue;
      RngStream rng(seed, "partition-dirichlet", 0, static_cast<std::uint64_t>(label));
      rng.shuffle(rows);
      // One Dirichlet draw per label; cumulative rounding keeps every
      // sample assigned exactly once.
      Vec weights(num_clients);
      double total = 0.0;
      for (int c = 0; c < num_clients; ++c) {
        weights[c] = rng.gamma(spec.alpha);
        total += weights[c];
      }
      double cumulative = 0.0;
      std::size_t start = 0;
      for (int c = 0; c < num_clients; ++c) {
        cumulative += weights[c] / total;
        std::size_t end = c + 1 == num_clients
                              ? rows.size()
                              : static_cast<std::size_t>(std::llround(cumulative * rows.size()));
        end = std::min(end, rows.size());
        end = std::max(end, start);
        for (std::size_t i = start; i < end; ++i) rows_per_client[c].push_back(rows[i]);
        start = end;
      }
    }
  }

  assign_rows(data, rows_per_client, shards);
  return shards;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv_dataset: cannot open " + path);

  std::vector<Vec> rows;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Vec values;
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() < 2) throw DataError("load_csv_dataset: row needs features and a label");
    labels.push_back(static_cast<int>(std::llround(values.back())));
    values.pop_back();
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw DataError("load_csv_dataset: inconsistent column count");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("load_csv_dataset: empty file");

  Dataset out;
  out.features = Matrix(rows.size(), rows.front().size());
  out.labels = labels;
  out.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), out.features.row(i).begin());
  }
  for (int label : labels) {
    if (label < 0) throw DataError("load_csv_dataset: negative label");
  }
  return out;
}

}  // namespace guardfl
