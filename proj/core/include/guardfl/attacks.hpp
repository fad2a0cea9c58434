#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "guardfl/dataset.hpp"
#include "guardfl/flat_model.hpp"
#include "guardfl/rng.hpp"
#include "guardfl/task_model.hpp"

namespace guardfl {

enum class AttackKind {
  none,
  blackbox,
  pgd_no_replace,
  pgd_replace,
  constrain_and_scale,
  dba,
};

enum class AdaptiveKind { none, dynamic_pdr, obfuscation, fixed_frequency };

// Trigger pattern: feature indices overwritten with fixed values, label
// forced to the target class.
struct TriggerSpec {
  std::vector<int> indices;
  std::vector<double> values;
  int target_label = 0;

  bool operator==(const TriggerSpec&) const = default;
};

// Fixed overwrite pattern on the trailing feature coordinates, which the
// synthetic task leaves class-uninformative.
TriggerSpec default_trigger(int feature_dim = 20, int target_label = 0);

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double pdr = 0.5;          // poisoned data rate in [0, 1]
  int target_label = 0;
  double pgd_radius = 2.0;   // > 0 for pgd kinds
  double cs_alpha = 0.5;     // class-loss weight in [0, 1]
  int dba_parts = 4;         // >= 2 for dba
  AdaptiveKind adaptive = AdaptiveKind::none;
  double obfuscation_sigma = 0.034;
  int attack_period = 10;    // fixed_frequency cadence
  int start_round = 1;       // first round the attack is mounted
  double replacement_scale = 0.0;  // 0 -> use clients-per-round
  TriggerSpec trigger = default_trigger();

  void validate() const;

  bool operator==(const AttackConfig&) const = default;
};

// L2-ball radius presets matching the usual per-task settings.
const std::map<std::string, double>& pgd_radius_presets();

// Applies the trigger to a uniformly chosen floor(pdr * n) subset and
// relabels those rows to the trigger's target. Output size equals input.
Dataset poison_dataset(const Dataset& data, const TriggerSpec& trigger,
                       double pdr, RngStream& rng);

// Projects w onto the L2 ball of the given radius around g.
FlatModel pgd_project(const FlatModel& w, const FlatModel& g, double radius);

// g + scale * (w_mal - g); with scale = clients-per-round this cancels the
// other equal-weight contributions in the round average.
FlatModel model_replacement_scale(const FlatModel& w_mal, const FlatModel& g,
                                  double scale);

// alpha * class_loss + (1 - alpha) * anomaly.
double constrain_and_scale_loss(double class_loss, double anomaly, double alpha);

// Splits the trigger's index set into `parts` disjoint sub-triggers and
// assigns them round-robin over the malicious ids. Union of the parts is
// the full index set.
std::map<int, TriggerSpec> dba_assign_subtriggers(const TriggerSpec& trigger,
                                                  int parts,
                                                  const std::vector<int>& malicious_ids);

// Per-round behavior after applying the adaptive strategy.
struct ClientBehavior {
  bool attack = true;        // false -> train benignly this round
  double pdr = 0.5;          // possibly redrawn by dynamic_pdr
  double noise_sigma = 0.0;  // obfuscation noise added before submission
};

ClientBehavior apply_adaptive(const AttackConfig& cfg, int round, int client,
                              RngStream& rng);

// Full malicious local step: resolves adaptive behavior, poisons the shard,
// trains (with the attack-specific objective/projection), and applies any
// post-processing (replacement scaling, obfuscation noise). `round_m` is
// the number of clients selected per round.
FlatModel run_attack(const TaskModel& global_model, const Dataset& local_data,
                     const AttackConfig& cfg, const TrainConfig& train_cfg,
                     int round, int client, int round_m,
                     const std::vector<int>& malicious_ids, std::uint64_t seed);

}  // namespace guardfl
