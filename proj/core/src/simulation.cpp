#include "guardfl/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "guardfl/attacks.hpp"
#include "guardfl/baselines.hpp"
#include "guardfl/errors.hpp"

namespace guardfl {

namespace {

constexpr std::uint64_t kTestSeedSalt = 0x9e3779b97f4a7c15ULL;

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("dump: cannot open " + path);
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? "," : "");
    }
    out << '\n';
  }
}

}  // namespace

namespace {

// Imported datasets are split in place: the last test_per_class rows of
// each class are held out for evaluation.
void split_import(const Dataset& full, int test_per_class, Dataset& train, Dataset& test) {
  std::vector<int> test_rows, train_rows;
  std::vector<int> remaining(full.num_classes, test_per_class);
  for (int i = static_cast<int>(full.size()) - 1; i >= 0; --i) {
    if (remaining[full.labels[i]] > 0) {
      --remaining[full.labels[i]];
      test_rows.push_back(i);
    } else {
      train_rows.push_back(i);
    }
  }
  std::reverse(train_rows.begin(), train_rows.end());
  std::reverse(test_rows.begin(), test_rows.end());
  if (train_rows.empty() || test_rows.empty()) {
    throw DataError("import split: dataset too small for the requested test size");
  }
  auto take = [&](const std::vector<int>& rows) {
    Dataset out;
    out.num_classes = full.num_classes;
    out.features = Matrix(rows.size(), full.feature_dim());
    out.labels.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = full.features.row(rows[k]);
      std::copy(src.begin(), src.end(), out.features.row(k).begin());
      out.labels[k] = full.labels[rows[k]];
    }
    return out;
  };
  train = take(train_rows);
  test = take(test_rows);
}

}  // namespace

Simulation::Simulation(const ExperimentConfig& cfg) : cfg_(cfg) {
  cfg_.validate();

  Dataset train_data;
  if (!cfg_.data.import_csv.empty()) {
    const Dataset imported = load_csv_dataset(cfg_.data.import_csv);
    if (static_cast<int>(imported.feature_dim()) != cfg_.data.feature_dim ||
        imported.num_classes > cfg_.data.classes) {
      throw ConfigError("import_csv: dataset shape disagrees with the data config");
    }
    split_import(imported, cfg_.data.test_per_class, train_data, test_set_);
  } else {
    train_data = gen_synthetic(cfg_.data.classes, cfg_.data.per_class,
                               cfg_.data.feature_dim, cfg_.sim.seed,
                               cfg_.data.separation, cfg_.data.noise);
    // Held-out evaluation data from a disjoint seed stream.
    test_set_ = gen_synthetic(cfg_.data.classes, cfg_.data.test_per_class,
                              cfg_.data.feature_dim, cfg_.sim.seed ^ kTestSeedSalt,
                              cfg_.data.separation, cfg_.data.noise);
  }
  shards_ = partition(train_data, cfg_.sim.total_clients, cfg_.data.partition,
                      cfg_.sim.seed);
  train_union_ = std::move(train_data);
  backdoor_test_ = make_backdoor_testset(test_set_, cfg_.attack.trigger);

  model_dims_.push_back(cfg_.data.feature_dim);
  for (int h : cfg_.data.hidden_dims) model_dims_.push_back(h);
  model_dims_.push_back(cfg_.data.classes);

  const TaskModel initial(model_dims_, cfg_.sim.seed);
  state_.global_model = initial.params();
  state_.prev_global = initial.params();
  state_.graph.kappa1 = cfg_.graph.kappa1;
  state_.graph.kappa2 = cfg_.graph.kappa2;
  state_.benign_scores = init_benign_scores(cfg_.sim.total_clients, cfg_.sim.seed);

  for (int id = 0; id < cfg_.sim.num_malicious(); ++id) malicious_ids_.push_back(id);
}

double Simulation::round_learning_rate(int round) const {
  if (cfg_.train.schedule == LrSchedule::inv_sqrt) {
    return cfg_.train.learning_rate / std::sqrt(static_cast<double>(round));
  }
  return cfg_.train.learning_rate;
}

void Simulation::dump_round_artifacts(int round, const DefenseOutcome& outcome) const {
  namespace fs = std::filesystem;
  if (!cfg_.output.dump_graph_dir.empty()) {
    fs::create_directories(cfg_.output.dump_graph_dir);
    const std::string prefix =
        cfg_.output.dump_graph_dir + "/round_" + std::to_string(round);
    write_matrix_csv(prefix + "_features.csv", state_.graph.features);
    write_matrix_csv(prefix + "_adjacency.csv", state_.graph.adjacency);
  }
  if (!cfg_.output.dump_clustering_dir.empty()) {
    fs::create_directories(cfg_.output.dump_clustering_dir);
    const std::string prefix =
        cfg_.output.dump_clustering_dir + "/round_" + std::to_string(round);
    write_matrix_csv(prefix + "_latent.csv", outcome.latent);
    write_matrix_csv(prefix + "_soft_assign.csv", outcome.soft_assign);
    write_matrix_csv(prefix + "_centers.csv", outcome.centers);
  }
}

RoundReport Simulation::run_round() {
  const int round = state_.round;
  if (round > cfg_.sim.max_rounds) throw ConfigError("run_round: past max_rounds");

  const std::vector<int> selected = select_clients(
      cfg_.sim.seed, round, cfg_.sim.clients_per_round, cfg_.sim.total_clients);

  TrainConfig train_cfg;
  train_cfg.learning_rate = round_learning_rate(round);
  train_cfg.epochs = cfg_.sim.local_epochs;
  train_cfg.batch_size = cfg_.train.batch_size;

  const TaskModel broadcast(model_dims_, state_.global_model);
  const bool attack_active =
      cfg_.attack.kind != AttackKind::none && round >= cfg_.attack.start_round;

  std::vector<ClientUpdateRecord> records;
  std::map<int, FlatModel> submitted;
  records.reserve(selected.size());
  for (int id : selected) {
    FlatModel weights;
    const bool is_malicious = id < cfg_.sim.num_malicious();
    if (is_malicious && attack_active) {
      weights = run_attack(broadcast, shards_[id], cfg_.attack, train_cfg, round, id,
                           cfg_.sim.clients_per_round, malicious_ids_, cfg_.sim.seed);
    } else {
      RngStream train_rng(cfg_.sim.seed, "train", round, id);
      weights = train_local(broadcast, shards_[id], train_cfg, train_rng).weights;
    }
    std::optional<FlatModel> prev;
    const auto it = state_.last_round_weights.find(id);
    if (it != state_.last_round_weights.end()) prev = it->second;
    submitted.emplace(id, weights);
    records.push_back(compute_updates(std::move(weights), state_.global_model, prev,
                                      state_.prev_global, id, shards_[id].size()));
  }

  RoundReport report;
  report.round = round;
  {
    Vec norms;
    norms.reserve(records.size());
    for (const auto& r : records) norms.push_back(l2_norm(r.update.flat()));
    report.median_update_norm = percentile(norms, 50.0);
  }

  FlatModel next_global;
  switch (cfg_.sim.defense) {
    case DefenseKind::none:
      next_global = fedavg_aggregate(records);
      break;
    case DefenseKind::guardfl: {
      DefenseOutcome outcome = defend_round(
          records, state_.global_model, cfg_.sim.total_clients, state_.graph,
          state_.benign_scores, state_.norm_tracker, cfg_.defense, cfg_.gae, round,
          cfg_.sim.seed);
      next_global = std::move(outcome.global);
      report.detected_malicious = outcome.detected_malicious;
      report.detected_benign = outcome.detected_benign;
      report.norm_bound = outcome.diagnostics.norm_bound;
      report.num_clusters = outcome.diagnostics.num_clusters;
      report.cluster_sizes = outcome.diagnostics.cluster_sizes;
      report.cluster_probs = outcome.diagnostics.cluster_probs;
      report.degenerate = outcome.diagnostics.degenerate;
      dump_round_artifacts(round, outcome);
      break;
    }
    case DefenseKind::krum:
    case DefenseKind::multi_krum: {
      std::vector<FlatModel> models;
      models.reserve(records.size());
      for (const auto& r : records) models.push_back(r.weights);  // ascending id
      next_global = cfg_.sim.defense == DefenseKind::krum
                        ? models[krum_select(models, cfg_.baseline.krum_f)]
                        : multi_krum_aggregate(models, cfg_.baseline.krum_f);
      break;
    }
    case DefenseKind::ndc:
      next_global =
          ndc_clip_aggregate(records, state_.global_model, cfg_.baseline.ndc_threshold);
      break;
    case DefenseKind::weak_dp:
      next_global = weak_dp_aggregate(records, cfg_.baseline.weak_dp_sigma,
                                      cfg_.sim.seed, round);
      break;
  }

  state_.prev_global = state_.global_model;
  state_.global_model = std::move(next_global);
  state_.last_round_weights = std::move(submitted);
  state_.round += 1;

  const TaskModel updated(model_dims_, state_.global_model);
  report.acc = 100.0 * evaluate(updated, test_set_);
  report.asr = 100.0 * compute_asr(updated, backdoor_test_);
  report.ds = 100.0 * compute_ds(report.asr / 100.0, report.acc / 100.0);
  report.grad_norm_sq = grad_norm_sq(updated, train_union_);

  const DetectionTally tally = score_detection(report.detected_malicious, selected,
                                               cfg_.sim.num_malicious());
  report.tp = tally.tp;
  report.fp = tally.fp;
  report.fn = tally.fn;
  return report;
}

ExperimentResult Simulation::run_all(ReportWriter* writer) {
  ExperimentResult result;
  result.rounds.reserve(cfg_.sim.max_rounds);
  for (int round = 1; round <= cfg_.sim.max_rounds; ++round) {
    RoundReport report = run_round();
    if (writer != nullptr) writer->append(report);
    // Detection quality is pooled over rounds where the attack is live.
    if (cfg_.attack.kind != AttackKind::none && round >= cfg_.attack.start_round) {
      result.pooled.tp += report.tp;
      result.pooled.fp += report.fp;
      result.pooled.fn += report.fn;
    }
    result.rounds.push_back(std::move(report));
  }
  const RoundReport& last = result.rounds.back();
  result.final_asr = last.asr;
  result.final_acc = last.acc;
  result.final_ds = last.ds;
  result.prf = detection_prf(result.pooled);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Simulation sim(cfg);
  ReportWriter writer(cfg.output.jsonl_path);
  ExperimentResult result = sim.run_all(&writer);
  write_summary_csv(cfg.output.csv_path, result.rounds);
  return result;
}

}  // namespace guardfl
