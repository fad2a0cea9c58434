#include "guardfl/config.hpp"

#include <fstream>
#include <sstream>

#include "guardfl/errors.hpp"
#include "json.hpp"

namespace guardfl {

namespace {

using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::none: return "none";
    case DefenseKind::guardfl: return "guardfl";
    case DefenseKind::krum: return "krum";
    case DefenseKind::multi_krum: return "multi_krum";
    case DefenseKind::ndc: return "ndc";
    case DefenseKind::weak_dp: return "weak_dp";
  }
  throw ConfigError("unknown defense kind");
}

DefenseKind defense_from_string(const std::string& s) {
  if (s == "none") return DefenseKind::none;
  if (s == "guardfl") return DefenseKind::guardfl;
  if (s == "krum") return DefenseKind::krum;
  if (s == "multi_krum") return DefenseKind::multi_krum;
  if (s == "ndc") return DefenseKind::ndc;
  if (s == "weak_dp") return DefenseKind::weak_dp;
  throw ConfigError("unknown defense: " + s);
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::blackbox: return "blackbox";
    case AttackKind::pgd_no_replace: return "pgd_no_replace";
    case AttackKind::pgd_replace: return "pgd_replace";
    case AttackKind::constrain_and_scale: return "constrain_and_scale";
    case AttackKind::dba: return "dba";
  }
  throw ConfigError("unknown attack kind");
}

AttackKind attack_from_string(const std::string& s) {
  if (s == "none") return AttackKind::none;
  if (s == "blackbox") return AttackKind::blackbox;
  if (s == "pgd_no_replace") return AttackKind::pgd_no_replace;
  if (s == "pgd_replace") return AttackKind::pgd_replace;
  if (s == "constrain_and_scale") return AttackKind::constrain_and_scale;
  if (s == "dba") return AttackKind::dba;
  throw ConfigError("unknown attack: " + s);
}

std::string to_string(AdaptiveKind kind) {
  switch (kind) {
    case AdaptiveKind::none: return "none";
    case AdaptiveKind::dynamic_pdr: return "dynamic_pdr";
    case AdaptiveKind::obfuscation: return "obfuscation";
    case AdaptiveKind::fixed_frequency: return "fixed_frequency";
  }
  throw ConfigError("unknown adaptive kind");
}

AdaptiveKind adaptive_from_string(const std::string& s) {
  if (s == "none") return AdaptiveKind::none;
  if (s == "dynamic_pdr") return AdaptiveKind::dynamic_pdr;
  if (s == "obfuscation") return AdaptiveKind::obfuscation;
  if (s == "fixed_frequency") return AdaptiveKind::fixed_frequency;
  throw ConfigError("unknown adaptive attack: " + s);
}

}  // namespace

DefenseKind defense_kind_from_string(const std::string& name) {
  return defense_from_string(name);
}

AttackKind attack_kind_from_string(const std::string& name) {
  return attack_from_string(name);
}

void ExperimentConfig::validate() const {
  sim.validate();
  attack.validate();
  defense.validate();
  gae.validate();
  if (sim.defense == DefenseKind::krum || sim.defense == DefenseKind::multi_krum) {
    baseline.validate(sim.clients_per_round);
  }
  if (data.classes < 2) throw ConfigError("data: need at least 2 classes");
  if (data.per_class < 1) throw ConfigError("data: per_class must be >= 1");
  if (data.feature_dim < 1) throw ConfigError("data: feature_dim must be >= 1");
  if (data.partition.kind == PartitionSpec::Kind::dirichlet && data.partition.alpha <= 0.0) {
    throw ConfigError("data: dirichlet alpha must be positive");
  }
  if (train.learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
  if (train.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (graph.kappa1 < 0.0 || graph.kappa1 > 1.0 || graph.kappa2 < 0.0 || graph.kappa2 > 1.0) {
    throw ConfigError("graph: kappa1/kappa2 must be in [0, 1]");
  }
  for (int idx : attack.trigger.indices) {
    if (idx < 0 || idx >= data.feature_dim) {
      throw ConfigError("attack: trigger index outside feature_dim");
    }
  }
  if (attack.target_label < 0 || attack.target_label >= data.classes) {
    throw ConfigError("attack: target_label outside class range");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig cfg;

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    read_if(s, "total_clients", cfg.sim.total_clients);
    read_if(s, "clients_per_round", cfg.sim.clients_per_round);
    read_if(s, "max_rounds", cfg.sim.max_rounds);
    read_if(s, "local_epochs", cfg.sim.local_epochs);
    read_if(s, "seed", cfg.sim.seed);
    read_if(s, "pmr", cfg.sim.pmr);
    if (s.contains("defense")) cfg.sim.defense = defense_from_string(s.at("defense"));
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    read_if(d, "classes", cfg.data.classes);
    read_if(d, "per_class", cfg.data.per_class);
    read_if(d, "feature_dim", cfg.data.feature_dim);
    read_if(d, "separation", cfg.data.separation);
    read_if(d, "noise", cfg.data.noise);
    read_if(d, "test_per_class", cfg.data.test_per_class);
    read_if(d, "hidden_dims", cfg.data.hidden_dims);
    read_if(d, "import_csv", cfg.data.import_csv);
    if (d.contains("partition")) {
      const json& p = d.at("partition");
      if (p.contains("kind")) {
        const std::string kind = p.at("kind");
        if (kind == "uniform") {
          cfg.data.partition.kind = PartitionSpec::Kind::uniform;
        } else if (kind == "dirichlet") {
          cfg.data.partition.kind = PartitionSpec::Kind::dirichlet;
        } else {
          throw ConfigError("unknown partition kind: " + kind);
        }
      }
      read_if(p, "alpha", cfg.data.partition.alpha);
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    read_if(t, "learning_rate", cfg.train.learning_rate);
    read_if(t, "batch_size", cfg.train.batch_size);
    if (t.contains("schedule")) {
      const std::string schedule = t.at("schedule");
      if (schedule == "constant") {
        cfg.train.schedule = LrSchedule::constant;
      } else if (schedule == "inv_sqrt") {
        cfg.train.schedule = LrSchedule::inv_sqrt;
      } else {
        throw ConfigError("unknown lr schedule: " + schedule);
      }
    }
  }
  if (j.contains("attack")) {
    const json& a = j.at("attack");
    if (a.contains("kind")) cfg.attack.kind = attack_from_string(a.at("kind"));
    read_if(a, "pdr", cfg.attack.pdr);
    read_if(a, "target_label", cfg.attack.target_label);
    read_if(a, "pgd_radius", cfg.attack.pgd_radius);
    read_if(a, "cs_alpha", cfg.attack.cs_alpha);
    read_if(a, "dba_parts", cfg.attack.dba_parts);
    if (a.contains("adaptive")) cfg.attack.adaptive = adaptive_from_string(a.at("adaptive"));
    read_if(a, "obfuscation_sigma", cfg.attack.obfuscation_sigma);
    read_if(a, "attack_period", cfg.attack.attack_period);
    read_if(a, "start_round", cfg.attack.start_round);
    read_if(a, "replacement_scale", cfg.attack.replacement_scale);
    if (a.contains("trigger")) {
      const json& t = a.at("trigger");
      read_if(t, "indices", cfg.attack.trigger.indices);
      read_if(t, "values", cfg.attack.trigger.values);
    }
  }
  if (j.contains("defense")) {
    const json& d = j.at("defense");
    read_if(d, "kappa3", cfg.defense.kappa3);
    read_if(d, "kappa4", cfg.defense.kappa4);
    read_if(d, "alpha1", cfg.defense.alpha1);
    read_if(d, "alpha2", cfg.defense.alpha2);
    read_if(d, "gamma", cfg.defense.gamma);
    read_if(d, "ape_enabled", cfg.defense.ape_enabled);
    if (d.contains("softmax_sign")) {
      const std::string sign = d.at("softmax_sign");
      if (sign == "as_written") {
        cfg.defense.softmax_sign = SoftmaxSign::as_written;
      } else if (sign == "negated") {
        cfg.defense.softmax_sign = SoftmaxSign::negated;
      } else {
        throw ConfigError("unknown softmax_sign: " + sign);
      }
    }
  }
  if (j.contains("graph")) {
    const json& g = j.at("graph");
    read_if(g, "kappa1", cfg.graph.kappa1);
    read_if(g, "kappa2", cfg.graph.kappa2);
    if (g.contains("edge_transform")) {
      const std::string transform = g.at("edge_transform");
      if (transform == "literal") {
        cfg.graph.edge_transform = EdgeTransform::literal;
      } else if (transform == "complement") {
        cfg.graph.edge_transform = EdgeTransform::complement;
      } else {
        throw ConfigError("unknown edge_transform: " + transform);
      }
    }
  }
  if (j.contains("gae")) {
    const json& g = j.at("gae");
    read_if(g, "latent_dim", cfg.gae.latent_dim);
    read_if(g, "hidden_dim", cfg.gae.hidden_dim);
    read_if(g, "lambda_clus", cfg.gae.lambda_clus);
    read_if(g, "pretrain_epochs", cfg.gae.pretrain_epochs);
    read_if(g, "joint_epochs", cfg.gae.joint_epochs);
    read_if(g, "learning_rate", cfg.gae.learning_rate);
  }
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    read_if(b, "krum_f", cfg.baseline.krum_f);
    read_if(b, "ndc_threshold", cfg.baseline.ndc_threshold);
    read_if(b, "weak_dp_sigma", cfg.baseline.weak_dp_sigma);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    read_if(o, "jsonl_path", cfg.output.jsonl_path);
    read_if(o, "csv_path", cfg.output.csv_path);
    read_if(o, "dump_graph_dir", cfg.output.dump_graph_dir);
    read_if(o, "dump_clustering_dir", cfg.output.dump_clustering_dir);
  }

  if (!j.contains("attack") || !j.at("attack").contains("trigger")) {
    cfg.attack.trigger = default_trigger(cfg.data.feature_dim, cfg.attack.target_label);
  }
  cfg.attack.trigger.target_label = cfg.attack.target_label;

  // The defense consumes the graph module's transform choice.
  cfg.defense.edge_transform = cfg.graph.edge_transform;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["sim"] = {
      {"total_clients", cfg.sim.total_clients},
      {"clients_per_round", cfg.sim.clients_per_round},
      {"max_rounds", cfg.sim.max_rounds},
      {"local_epochs", cfg.sim.local_epochs},
      {"seed", cfg.sim.seed},
      {"pmr", cfg.sim.pmr},
      {"defense", to_string(cfg.sim.defense)},
  };
  j["data"] = {
      {"classes", cfg.data.classes},
      {"per_class", cfg.data.per_class},
      {"feature_dim", cfg.data.feature_dim},
      {"separation", cfg.data.separation},
      {"noise", cfg.data.noise},
      {"test_per_class", cfg.data.test_per_class},
      {"hidden_dims", cfg.data.hidden_dims},
      {"import_csv", cfg.data.import_csv},
      {"partition",
       {{"kind", cfg.data.partition.kind == PartitionSpec::Kind::uniform ? "uniform"
                                                                         : "dirichlet"},
        {"alpha", cfg.data.partition.alpha}}},
  };
  j["train"] = {
      {"learning_rate", cfg.train.learning_rate},
      {"batch_size", cfg.train.batch_size},
      {"schedule", cfg.train.schedule == LrSchedule::constant ? "constant" : "inv_sqrt"},
  };
  j["attack"] = {
      {"kind", to_string(cfg.attack.kind)},
      {"pdr", cfg.attack.pdr},
      {"target_label", cfg.attack.target_label},
      {"pgd_radius", cfg.attack.pgd_radius},
      {"cs_alpha", cfg.attack.cs_alpha},
      {"dba_parts", cfg.attack.dba_parts},
      {"adaptive", to_string(cfg.attack.adaptive)},
      {"obfuscation_sigma", cfg.attack.obfuscation_sigma},
      {"attack_period", cfg.attack.attack_period},
      {"start_round", cfg.attack.start_round},
      {"replacement_scale", cfg.attack.replacement_scale},
      {"trigger",
       {{"indices", cfg.attack.trigger.indices}, {"values", cfg.attack.trigger.values}}},
  };
  j["defense"] = {
      {"kappa3", cfg.defense.kappa3},
      {"kappa4", cfg.defense.kappa4},
      {"alpha1", cfg.defense.alpha1},
      {"alpha2", cfg.defense.alpha2},
      {"gamma", cfg.defense.gamma},
      {"ape_enabled", cfg.defense.ape_enabled},
      {"softmax_sign",
       cfg.defense.softmax_sign == SoftmaxSign::as_written ? "as_written" : "negated"},
  };
  j["graph"] = {
      {"kappa1", cfg.graph.kappa1},
      {"kappa2", cfg.graph.kappa2},
      {"edge_transform",
       cfg.graph.edge_transform == EdgeTransform::literal ? "literal" : "complement"},
  };
  j["gae"] = {
      {"latent_dim", cfg.gae.latent_dim},
      {"hidden_dim", cfg.gae.hidden_dim},
      {"lambda_clus", cfg.gae.lambda_clus},
      {"pretrain_epochs", cfg.gae.pretrain_epochs},
      {"joint_epochs", cfg.gae.joint_epochs},
      {"learning_rate", cfg.gae.learning_rate},
  };
  j["baseline"] = {
      {"krum_f", cfg.baseline.krum_f},
      {"ndc_threshold", cfg.baseline.ndc_threshold},
      {"weak_dp_sigma", cfg.baseline.weak_dp_sigma},
  };
  j["output"] = {
      {"jsonl_path", cfg.output.jsonl_path},
      {"csv_path", cfg.output.csv_path},
      {"dump_graph_dir", cfg.output.dump_graph_dir},
      {"dump_clustering_dir", cfg.output.dump_clustering_dir},
  };
  return j.dump(2);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("save_config: cannot open " + path);
  out << serialize_config(cfg) << '\n';
}

}  // namespace guardfl
