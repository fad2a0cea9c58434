#include "guardfl/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"

namespace guardfl {

TriggerSpec default_trigger(int feature_dim, int target_label) {
  TriggerSpec trigger;
  trigger.target_label = target_label;
  const int width = std::min(4, feature_dim);
  for (int k = feature_dim - width; k < feature_dim; ++k) {
    trigger.indices.push_back(k);
    trigger.values.push_back(3.0);
  }
  return trigger;
}

void AttackConfig::validate() const {
  if (pdr < 0.0 || pdr > 1.0) throw ConfigError("attack: pdr must be in [0, 1]");
  if (cs_alpha < 0.0 || cs_alpha > 1.0) throw ConfigError("attack: cs_alpha must be in [0, 1]");
  if ((kind == AttackKind::pgd_no_replace || kind == AttackKind::pgd_replace) &&
      pgd_radius <= 0.0) {
    throw ConfigError("attack: pgd_radius must be positive");
  }
  if (kind == AttackKind::dba && dba_parts < 2) {
    throw ConfigError("attack: dba needs at least 2 parts");
  }
  if (trigger.indices.size() != trigger.values.size()) {
    throw ConfigError("attack: trigger indices/values length mismatch");
  }
  if (obfuscation_sigma < 0.0) throw ConfigError("attack: obfuscation_sigma must be >= 0");
  if (attack_period < 1) throw ConfigError("attack: attack_period must be >= 1");
  if (start_round < 1) throw ConfigError("attack: start_round must be >= 1");
}

const std::map<std::string, double>& pgd_radius_presets() {
  static const std::map<std::string, double> presets = {
      {"mnist", 0.2},
      {"cifar10", 1.0},
      {"sentiment140", 2.0},
      {"reddit", 2.0},
  };
  return presets;
}

namespace {

void apply_trigger(Matrix& features, std::size_t row, const TriggerSpec& trigger) {
  auto values = features.row(row);
  for (std::size_t k = 0; k < trigger.indices.size(); ++k) {
    const int idx = trigger.indices[k];
    if (idx < 0 || static_cast<std::size_t>(idx) >= values.size()) {
      throw ShapeError("trigger index out of range");
    }
    values[idx] = trigger.values[k];
  }
}

}  // namespace

Dataset poison_dataset(const Dataset& data, const TriggerSpec& trigger,
                       double pdr, RngStream& rng) {
  if (pdr < 0.0 || pdr > 1.0) throw ConfigError("poison_dataset: pdr must be in [0, 1]");
  Dataset out = data;
  const std::size_t n = data.size();
  const std::size_t count = static_cast<std::size_t>(pdr * static_cast<double>(n));
  if (count == 0) return out;
  const std::vector<int> rows = rng.sample_without_replacement(static_cast<int>(n),
                                                               static_cast<int>(count));
  for (int row : rows) {
    apply_trigger(out.features, static_cast<std::size_t>(row), trigger);
    out.labels[row] = trigger.target_label;
  }
  return out;
}

FlatModel pgd_project(const FlatModel& w, const FlatModel& g, double radius) {
  if (radius <= 0.0) throw ConfigError("pgd_project: radius must be positive");
  if (!w.same_shape(g)) throw ShapeError("pgd_project: layer specs differ");
  const double dist = l2_distance(w, g);
  if (dist <= radius) return w;
  FlatModel out = g;
  FlatModel delta = subtract(w, g);
  out.add_scaled(delta, radius / dist);
  return out;
}

FlatModel model_replacement_scale(const FlatModel& w_mal, const FlatModel& g,
                                  double scale) {
  if (!w_mal.same_shape(g)) throw ShapeError("model_replacement_scale: layer specs differ");
  FlatModel out = g;
  FlatModel delta = subtract(w_mal, g);
  out.add_scaled(delta, scale);
  return out;
}

double constrain_and_scale_loss(double class_loss, double anomaly, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("constrain_and_scale_loss: alpha in [0, 1]");
  return alpha * class_loss + (1.0 - alpha) * anomaly;
}

std::map<int, TriggerSpec> dba_assign_subtriggers(const TriggerSpec& trigger,
                                                  int parts,
                                                  const std::vector<int>& malicious_ids) {
  if (parts < 1 || static_cast<std::size_t>(parts) > trigger.indices.size()) {
    throw ConfigError("dba_assign_subtriggers: parts exceeds trigger size");
  }
  // Contiguous, near-equal chunks of the index list; disjoint with full
  // coverage by construction.
  std::vector<TriggerSpec> subs(parts);
  const std::size_t n = trigger.indices.size();
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t cursor = 0;
  for (int p = 0; p < parts; ++p) {
    const std::size_t take = base + (static_cast<std::size_t>(p) < extra ? 1 : 0);
    for (std::size_t k = 0; k < take; ++k, ++cursor) {
      subs[p].indices.push_back(trigger.indices[cursor]);
      subs[p].values.push_back(trigger.values[cursor]);
    }
    subs[p].target_label = trigger.target_label;
  }

  std::map<int, TriggerSpec> assignment;
  std::vector<int> ids = malicious_ids;
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    assignment[ids[i]] = subs[i % parts];
  }
  return assignment;
}

ClientBehavior apply_adaptive(const AttackConfig& cfg, int round, int client,
                              RngStream& rng) {
  (void)client;
  ClientBehavior behavior;
  behavior.pdr = cfg.pdr;
  switch (cfg.adaptive) {
    case AdaptiveKind::none:
      break;
    case AdaptiveKind::dynamic_pdr:
      behavior.pdr = rng.uniform(0.05, 0.20);
      break;
    case AdaptiveKind::obfuscation:
      behavior.noise_sigma = cfg.obfuscation_sigma;
      break;
    case AdaptiveKind::fixed_frequency:
      behavior.attack = (round % cfg.attack_period) == 0;
      break;
  }
  return behavior;
}

namespace {

// Training loop with the blended objective: alpha * class loss +
// (1 - alpha) * ||W - G||_2, differentiated by hand. The anomaly gradient
// is (W - G) / ||W - G||, zero at W = G.
FlatModel train_constrain_and_scale(const TaskModel& global_model, const Dataset& data,
                                    const TrainConfig& train_cfg, double alpha,
                                    RngStream& rng) {
  TaskModel local(global_model.dims(), global_model.params());
  const FlatModel& anchor = global_model.params();
  const int n = static_cast<int>(data.size());
  const int batch = std::max(1, train_cfg.batch_size);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += batch) {
      const int end = std::min(start + batch, n);
      std::span<const int> rows(order.data() + start, static_cast<std::size_t>(end - start));
      FlatModel grad = local.gradient(data, rows);
      grad.scale(alpha);
      FlatModel deviation = subtract(local.params(), anchor);
      const double dist = l2_norm(std::span<const double>(deviation.params()));
      if (dist > 0.0) grad.add_scaled(deviation, (1.0 - alpha) / dist);
      FlatModel next = local.params();
      next.add_scaled(grad, -train_cfg.learning_rate);
      local.set_params(std::move(next));
    }
  }
  return local.params();
}

// PGD training: standard epochs, projected back onto the ball after each
// epoch so the model never drifts far from the broadcast weights.
FlatModel train_pgd(const TaskModel& global_model, const Dataset& data,
                    const TrainConfig& train_cfg, double radius, RngStream& rng) {
  TaskModel local(global_model.dims(), global_model.params());
  TrainConfig one_epoch = train_cfg;
  one_epoch.epochs = 1;
  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    TrainResult result = train_local(local, data, one_epoch, rng);
    local.set_params(pgd_project(FlatModel(result.weights), global_model.params(), radius));
  }
  return local.params();
}

}  // namespace

FlatModel run_attack(const TaskModel& global_model, const Dataset& local_data,
                     const AttackConfig& cfg, const TrainConfig& train_cfg,
                     int round, int client, int round_m,
                     const std::vector<int>& malicious_ids, std::uint64_t seed) {
  RngStream adaptive_rng(seed, "attack-adaptive", round, client);
  const ClientBehavior behavior = apply_adaptive(cfg, round, client, adaptive_rng);
  RngStream train_rng(seed, "train", round, client);

  if (!behavior.attack || cfg.kind == AttackKind::none) {
    return train_local(global_model, local_data, train_cfg, train_rng).weights;
  }

  TriggerSpec trigger = cfg.trigger;
  if (cfg.kind == AttackKind::dba) {
    const auto assignment = dba_assign_subtriggers(trigger, cfg.dba_parts, malicious_ids);
    const auto it = assignment.find(client);
    if (it != assignment.end()) trigger = it->second;
  }

  RngStream poison_rng(seed, "poison", round, client);
  const Dataset poisoned = poison_dataset(local_data, trigger, behavior.pdr, poison_rng);

  FlatModel weights;
  switch (cfg.kind) {
    case AttackKind::none:
    case AttackKind::blackbox:
    case AttackKind::dba:
      weights = train_local(global_model, poisoned, train_cfg, train_rng).weights;
      break;
    case AttackKind::pgd_no_replace:
      weights = train_pgd(global_model, poisoned, train_cfg, cfg.pgd_radius, train_rng);
      break;
    case AttackKind::pgd_replace: {
      weights = train_pgd(global_model, poisoned, train_cfg, cfg.pgd_radius, train_rng);
      const double scale =
          cfg.replacement_scale > 0.0 ? cfg.replacement_scale : static_cast<double>(round_m);
      weights = model_replacement_scale(weights, global_model.params(), scale);
      break;
    }
    case AttackKind::constrain_and_scale:
      weights = train_constrain_and_scale(global_model, poisoned, train_cfg,
                                          cfg.cs_alpha, train_rng);
      break;
  }

  if (behavior.noise_sigma > 0.0) {
    RngStream noise_rng(seed, "attack-noise", round, client);
    for (double& p : weights.params()) p += noise_rng.normal(0.0, behavior.noise_sigma);
  }
  return weights;
}

}  // namespace guardfl
