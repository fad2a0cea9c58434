#pragma once

#include <string>
#include <vector>

#include "guardfl/attacks.hpp"
#include "guardfl/baselines.hpp"
#include "guardfl/dataset.hpp"
#include "guardfl/defense.hpp"
#include "guardfl/fl_core.hpp"
#include "guardfl/gae.hpp"

namespace guardfl {

enum class LrSchedule { constant, inv_sqrt };

struct TrainSettings {
  double learning_rate = 0.05;
  int batch_size = 32;
  LrSchedule schedule = LrSchedule::constant;

  bool operator==(const TrainSettings&) const = default;
};

struct DataConfig {
  int classes = 4;
  int per_class = 250;
  int feature_dim = 20;
  double separation = 3.0;
  double noise = 1.0;
  int test_per_class = 50;
  std::vector<int> hidden_dims = {16, 16};
  PartitionSpec partition;
  std::string import_csv;  // optional: overrides the synthetic generator

  bool operator==(const DataConfig&) const = default;
};

struct GraphConfig {
  double kappa1 = 0.1;
  double kappa2 = 0.1;
  EdgeTransform edge_transform = EdgeTransform::literal;

  bool operator==(const GraphConfig&) const = default;
};

struct OutputConfig {
  std::string jsonl_path = "results.jsonl";
  std::string csv_path = "summary.csv";
  std::string dump_graph_dir;
  std::string dump_clustering_dir;

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  SimConfig sim;
  DataConfig data;
  TrainSettings train;
  AttackConfig attack;
  DefenseConfig defense;
  GraphConfig graph;
  GaeConfig gae;
  BaselineConfig baseline;
  OutputConfig output;

  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Enum parsers shared with CLI overrides.
DefenseKind defense_kind_from_string(const std::string& name);
AttackKind attack_kind_from_string(const std::string& name);

}  // namespace guardfl
