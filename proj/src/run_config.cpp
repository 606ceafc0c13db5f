/*
 * Copyright 2026 The copg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "copg/run_config.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "copg/binio.hpp"
#include "copg/errors.hpp"
#include "copg/version.hpp"

namespace copg::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& pointer,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(pointer + "/" + key, "unknown key");
    }
  }
}

template <typename T>
void read_field(const json& obj, const std::string& pointer, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(pointer + "/" + key, "wrong type");
  }
}

void parse_loss(const json& j, const std::string& pointer, trainer::LossConfig& loss) {
  check_keys(j, pointer, {"kind", "pos_weight", "gamma"});
  std::string kind;
  read_field(j, pointer, "kind", kind);
  if (!kind.empty()) {
    if (kind == "bce_logits") loss.kind = trainer::LossConfig::Kind::kBceLogits;
    else if (kind == "focal") loss.kind = trainer::LossConfig::Kind::kFocal;
    else throw ConfigError(pointer + "/kind", "must be bce_logits or focal");
  }
  read_field(j, pointer, "pos_weight", loss.pos_weight);
  read_field(j, pointer, "gamma", loss.gamma);
  if (loss.pos_weight < 1.0) throw ConfigError(pointer + "/pos_weight", "must be >= 1");
  if (loss.gamma < 0.0) throw ConfigError(pointer + "/gamma", "must be >= 0");
}

void parse_lr(const json& j, const std::string& pointer, ad::LrSchedule& lr) {
  check_keys(j, pointer, {"kind", "base", "milestones", "gamma", "t_max", "lr_min"});
  std::string kind;
  read_field(j, pointer, "kind", kind);
  if (!kind.empty()) {
    if (kind == "constant") lr.kind = ad::LrSchedule::Kind::kConstant;
    else if (kind == "multistep") lr.kind = ad::LrSchedule::Kind::kMultiStep;
    else if (kind == "cosine") lr.kind = ad::LrSchedule::Kind::kCosine;
    else throw ConfigError(pointer + "/kind", "must be constant, multistep or cosine");
  }
  read_field(j, pointer, "base", lr.base);
  read_field(j, pointer, "milestones", lr.milestones);
  read_field(j, pointer, "gamma", lr.gamma);
  read_field(j, pointer, "t_max", lr.t_max);
  read_field(j, pointer, "lr_min", lr.lr_min);
  if (lr.base <= 0.0) throw ConfigError(pointer + "/base", "must be > 0");
  if (lr.gamma <= 0.0) throw ConfigError(pointer + "/gamma", "must be > 0");
  if (lr.lr_min <= 0.0) throw ConfigError(pointer + "/lr_min", "must be > 0");
}

void parse_model(const json& j, trainer::TrainConfig& train) {
  check_keys(j, "/model",
             {"kind", "hidden_dim", "out_dim", "num_layers", "dropout", "heads", "leaky_slope",
              "emb_dim", "lightgcn_combine", "lightgcn_norm", "mlp_layers", "num_walks",
              "walk_length", "walk_topk", "neighbors_per_hop", "concat_aggregator"});
  std::string kind = "graphsage";
  read_field(j, "/model", "kind", kind);
  train = trainer::default_config(trainer::model_kind_from_string(kind));
  auto& m = train.model_cfg;
  read_field(j, "/model", "hidden_dim", m.hidden_dim);
  read_field(j, "/model", "out_dim", m.out_dim);
  read_field(j, "/model", "num_layers", m.num_layers);
  read_field(j, "/model", "dropout", m.dropout);
  read_field(j, "/model", "heads", m.heads);
  read_field(j, "/model", "leaky_slope", m.leaky_slope);
  read_field(j, "/model", "emb_dim", m.emb_dim);
  read_field(j, "/model", "lightgcn_combine", m.lightgcn_combine);
  read_field(j, "/model", "lightgcn_norm", m.lightgcn_norm);
  read_field(j, "/model", "mlp_layers", m.mlp_layers);
  read_field(j, "/model", "num_walks", m.num_walks);
  read_field(j, "/model", "walk_length", m.walk_length);
  read_field(j, "/model", "walk_topk", m.walk_topk);
  read_field(j, "/model", "neighbors_per_hop", m.neighbors_per_hop);
  read_field(j, "/model", "concat_aggregator", m.concat_aggregator);
  if (m.dropout < 0.0 || m.dropout >= 1.0) {
    throw ConfigError("/model/dropout", "must be in [0,1)");
  }
}

void parse_train(const json& j, trainer::TrainConfig& train) {
  check_keys(j, "/train", {"epochs", "batch_size", "neg_ratio", "patience", "seeds", "fanout",
                           "weight_decay", "loss", "lr", "eval_seed"});
  read_field(j, "/train", "epochs", train.epochs);
  int batch = static_cast<int>(train.batch_size);
  read_field(j, "/train", "batch_size", batch);
  train.batch_size = static_cast<std::size_t>(batch);
  read_field(j, "/train", "neg_ratio", train.neg_ratio);
  read_field(j, "/train", "patience", train.patience);
  read_field(j, "/train", "seeds", train.seeds);
  read_field(j, "/train", "fanout", train.fanout);
  read_field(j, "/train", "weight_decay", train.weight_decay);
  read_field(j, "/train", "eval_seed", train.eval_seed);
  if (j.contains("loss")) parse_loss(j.at("loss"), "/train/loss", train.loss);
  if (j.contains("lr")) parse_lr(j.at("lr"), "/train/lr", train.lr);

  if (train.epochs < 1) throw ConfigError("/train/epochs", "must be >= 1");
  if (batch < 1) throw ConfigError("/train/batch_size", "must be >= 1");
  if (train.neg_ratio <= 0.0) throw ConfigError("/train/neg_ratio", "must be > 0");
  if (train.patience < 1) throw ConfigError("/train/patience", "must be >= 1");
  if (train.seeds.empty()) throw ConfigError("/train/seeds", "must list >= 1 seed");
  if (train.weight_decay < 0.0) throw ConfigError("/train/weight_decay", "must be >= 0");

  const auto depth = static_cast<std::size_t>(
      train.model == trainer::ModelKind::kGat ? 2 : train.model_cfg.num_layers);
  if (train.model != trainer::ModelKind::kLightGcn && train.fanout.size() != depth) {
    throw ConfigError("/train/fanout", "length " + std::to_string(train.fanout.size()) +
                                           " must equal model depth /model/num_layers = " +
                                           std::to_string(depth));
  }
}

void parse_synth(const json& j, synth::SyntheticSpec& s) {
  check_keys(j, "/synth", {"kind", "n", "clusters", "p_in", "p_out", "er_p", "feature_mode",
                           "feature_dim", "noise", "neg_ratio", "seed"});
  std::string kind;
  read_field(j, "/synth", "kind", kind);
  if (!kind.empty()) {
    if (kind == "planted_partition") s.kind = synth::SyntheticSpec::Kind::kPlantedPartition;
    else if (kind == "path") s.kind = synth::SyntheticSpec::Kind::kPath;
    else if (kind == "star") s.kind = synth::SyntheticSpec::Kind::kStar;
    else if (kind == "triangle") s.kind = synth::SyntheticSpec::Kind::kTriangle;
    else if (kind == "erdos_renyi") s.kind = synth::SyntheticSpec::Kind::kErdosRenyi;
    else throw ConfigError("/synth/kind", "unknown generator");
  }
  std::string fmode;
  read_field(j, "/synth", "feature_mode", fmode);
  if (!fmode.empty()) {
    if (fmode == "cluster_signal") s.feature_mode = synth::SyntheticSpec::FeatureMode::kClusterSignal;
    else if (fmode == "random") s.feature_mode = synth::SyntheticSpec::FeatureMode::kRandom;
    else if (fmode == "onehot_id") s.feature_mode = synth::SyntheticSpec::FeatureMode::kOneHotId;
    else throw ConfigError("/synth/feature_mode", "unknown feature mode");
  }
  read_field(j, "/synth", "n", s.n);
  read_field(j, "/synth", "clusters", s.clusters);
  read_field(j, "/synth", "p_in", s.p_in);
  read_field(j, "/synth", "p_out", s.p_out);
  read_field(j, "/synth", "er_p", s.er_p);
  read_field(j, "/synth", "feature_dim", s.feature_dim);
  read_field(j, "/synth", "noise", s.noise);
  read_field(j, "/synth", "neg_ratio", s.neg_ratio);
  read_field(j, "/synth", "seed", s.seed);
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  cfg.raw = j;
  check_keys(j, "", {"workdir", "paths", "dataset", "split", "features", "synth", "model",
                     "train", "search"});
  read_field(j, "", "workdir", cfg.workdir);

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "/paths", {"input", "merged", "graph", "node_map", "features", "embeddings",
                             "splits", "walks", "runs"});
    read_field(p, "/paths", "input", cfg.paths.input);
    read_field(p, "/paths", "merged", cfg.paths.merged);
    read_field(p, "/paths", "graph", cfg.paths.graph);
    read_field(p, "/paths", "node_map", cfg.paths.node_map);
    read_field(p, "/paths", "features", cfg.paths.features);
    read_field(p, "/paths", "embeddings", cfg.paths.embeddings);
    read_field(p, "/paths", "splits", cfg.paths.splits);
    read_field(p, "/paths", "walks", cfg.paths.walks);
    read_field(p, "/paths", "runs", cfg.paths.runs);
  }

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, "/dataset", {"category_depth", "keep_discontinued"});
    read_field(d, "/dataset", "category_depth", cfg.dataset.category_depth);
    read_field(d, "/dataset", "keep_discontinued", cfg.dataset.keep_discontinued);
    if (cfg.dataset.category_depth < 1) {
      throw ConfigError("/dataset/category_depth", "must be >= 1");
    }
  }

  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, "/split", {"ratio", "val_fraction", "seed", "transductive", "eval_neg_ratio"});
    read_field(s, "/split", "ratio", cfg.split.ratio);
    read_field(s, "/split", "val_fraction", cfg.split.val_fraction);
    read_field(s, "/split", "seed", cfg.split.seed);
    read_field(s, "/split", "transductive", cfg.split.transductive);
    read_field(s, "/split", "eval_neg_ratio", cfg.split.eval_neg_ratio);
    if (!(cfg.split.ratio > 0.0 && cfg.split.ratio < 1.0)) {
      throw ConfigError("/split/ratio", "must be in (0,1)");
    }
    if (!(cfg.split.val_fraction >= 0.0 && cfg.split.val_fraction < 1.0)) {
      throw ConfigError("/split/val_fraction", "must be in [0,1)");
    }
    if (cfg.split.eval_neg_ratio <= 0.0) {
      throw ConfigError("/split/eval_neg_ratio", "must be > 0");
    }
  }

  if (j.contains("features")) {
    const auto& f = j.at("features");
    check_keys(f, "/features",
               {"title_dim", "path_dim", "pca_target", "max_groups", "fit_group_vocab", "seed"});
    read_field(f, "/features", "title_dim", cfg.features.title_dim);
    read_field(f, "/features", "path_dim", cfg.features.path_dim);
    if (f.contains("pca_target") && !f.at("pca_target").is_null()) {
      int t = 0;
      read_field(f, "/features", "pca_target", t);
      cfg.features.pca_target = t;
    }
    read_field(f, "/features", "max_groups", cfg.features.max_groups);
    read_field(f, "/features", "fit_group_vocab", cfg.features.fit_group_vocab);
    read_field(f, "/features", "seed", cfg.features.seed);
    if (cfg.features.title_dim < 1) throw ConfigError("/features/title_dim", "must be >= 1");
    if (cfg.features.path_dim < 1) throw ConfigError("/features/path_dim", "must be >= 1");
    if (cfg.features.pca_target && (*cfg.features.pca_target < 1 ||
                                    *cfg.features.pca_target > cfg.features.title_dim)) {
      throw ConfigError("/features/pca_target", "must be in [1, title_dim]");
    }
  }

  if (j.contains("synth")) parse_synth(j.at("synth"), cfg.synth);

  if (j.contains("model")) {
    parse_model(j.at("model"), cfg.train);
  } else {
    cfg.train = trainer::default_config(trainer::ModelKind::kGraphSage);
  }
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);

  if (j.contains("search")) {
    const auto& s = j.at("search");
    check_keys(s, "/search", {"trials", "seed", "space"});
    read_field(s, "/search", "trials", cfg.search_trials);
    read_field(s, "/search", "seed", cfg.search_seed);
    if (cfg.search_trials < 1) throw ConfigError("/search/trials", "must be >= 1");
    if (s.contains("space")) {
      for (const auto& [key, values] : s.at("space").items()) {
        if (!values.is_array() || values.empty()) {
          throw ConfigError("/search/space/" + key, "must be a non-empty array");
        }
        // Validate the key name eagerly against a throwaway config.
        trainer::TrainConfig probe = cfg.train;
        trainer::apply_search_assignment(probe, key, values.at(0));
        cfg.search_space.params[key] =
            std::vector<json>(values.begin(), values.end());
      }
    }
  }
  return cfg;
}

RunConfig validate_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

uint64_t config_hash(const RunConfig& cfg) {
  const std::string dump = cfg.raw.dump();
  return binio::fnv1a_bytes(dump.data(), dump.size());
}

void manifest_update_stage(const std::string& workdir, const std::string& stage,
                           const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs, uint64_t config_hash) {
  namespace fs = std::filesystem;
  const std::string path = workdir + "/manifest.json";
  json manifest;
  if (fs::exists(path)) {
    std::ifstream is(path);
    try {
      is >> manifest;
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  manifest["config_hash"] = binio::hex64(config_hash);
  manifest["artifact_version"] = kVersion;
  json stage_entry;
  auto digest_map = [](const std::vector<std::string>& paths) {
    json out = json::object();
    for (const auto& p : paths) {
      if (fs::exists(p)) out[p] = binio::hex64(binio::fnv1a_file(p));
    }
    return out;
  };
  stage_entry["inputs"] = digest_map(inputs);
  stage_entry["outputs"] = digest_map(outputs);
  stage_entry["timestamp"] = static_cast<int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  manifest["stages"][stage] = stage_entry;
  std::ofstream os(path);
  os << manifest.dump(2) << "\n";
}

WorkdirLock::WorkdirLock(const std::string& workdir) {
  namespace fs = std::filesystem;
  fs::create_directories(workdir);
  path_ = workdir + "/.lock";
  if (fs::exists(path_)) {
    throw ContractError("workdir is locked by another writer: " + path_);
  }
  std::ofstream os(path_);
  os << "locked\n";
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace copg::cli
