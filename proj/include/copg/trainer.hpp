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

#ifndef COPG_TRAINER_HPP_
#define COPG_TRAINER_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "copg/autodiff.hpp"
#include "copg/checkpoint.hpp"
#include "copg/features.hpp"
#include "copg/graph.hpp"
#include "copg/models.hpp"
#include "copg/optim.hpp"
#include "copg/sampler.hpp"

namespace copg::trainer {

enum class ModelKind { kLightGcn, kGraphSage, kGat, kPinSage };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

struct LossConfig {
  enum class Kind { kBceLogits, kFocal };
  Kind kind = Kind::kBceLogits;
  double pos_weight = 2.0;
  double gamma = 2.0;
};

// Superset of per-model knobs; each model reads the fields it understands.
struct ModelConfig {
  int hidden_dim = 32;   // sage hidden / gat per-head width / pinsage hidden
  int out_dim = 32;      // sage out; gat derives hidden*heads; pinsage out
  int num_layers = 2;    // sage depth / lightgcn K / pinsage depth
  double dropout = 0.3;
  int heads = 2;              // gat first-layer heads
  double leaky_slope = 0.2;   // gat
  int emb_dim = 128;          // lightgcn
  std::string lightgcn_combine = "mean";     // mean | sum
  std::string lightgcn_norm = "symmetric";   // mean | symmetric
  int mlp_layers = 2;         // sage decoder depth
  uint32_t num_walks = 15;    // pinsage walk parameters
  uint32_t walk_length = 5;
  uint32_t walk_topk = 8;
  uint32_t neighbors_per_hop = 8;
  bool concat_aggregator = false;  // sage variant
};

struct TrainConfig {
  ModelKind model = ModelKind::kGraphSage;
  ModelConfig model_cfg;
  LossConfig loss;
  ad::LrSchedule lr = ad::LrSchedule::constant(1e-3);
  int epochs = 100;
  std::size_t batch_size = 512;
  double neg_ratio = 0.3;
  int patience = 20;
  std::vector<uint64_t> seeds = {1};
  sampler::FanoutSpec fanout = {5, 5};
  double weight_decay = 1e-4;
  uint64_t eval_seed = 97;  // fixed eval block sampling
};

// Per-model defaults matching each architecture's reported training recipe.
TrainConfig default_config(ModelKind kind);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0, train_acc = 0, train_auc = 0, train_ap = 0;
  double val_loss = 0, val_acc = 0, val_auc = 0, val_ap = 0;
  double seconds = 0;
};

class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw ContractError("patience must be >= 1");
  }

  // Returns true when val_auc strictly improves on the best seen.
  bool observe(double val_auc, int epoch) {
    if (val_auc > best_) {
      best_ = val_auc;
      best_epoch_ = epoch;
      since_ = 0;
      return true;
    }
    ++since_;
    return false;
  }

  bool should_stop() const { return since_ >= patience_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int epochs_since_improvement() const { return since_; }

 private:
  double best_ = -1.0;
  int best_epoch_ = -1;
  int since_ = 0;
  int patience_;
};

// Everything a training run needs, already split. Graphs share one node id
// space; per-split graphs keep only that split's internal edges.
struct TrainData {
  const graph::Graph* full_graph = nullptr;
  graph::Graph train_graph;
  graph::Graph val_graph;
  graph::Graph test_graph;
  std::vector<uint32_t> train_nodes, val_nodes, test_nodes;
  graph::EdgeList train_pos;
  graph::LabeledEdgeSet val_set;   // fixed positives + seeded negatives
  graph::LabeledEdgeSet test_set;
  const features::FeatureMatrix* feats = nullptr;  // null for lightgcn
  std::optional<sampler::WalkTable> train_walks;   // computed when absent (pinsage)
  bool transductive = false;
};

// Builds TrainData from a graph + tri-split (inductive) with fixed seeded
// negatives for val/test at `eval_neg_ratio`.
TrainData make_train_data(const graph::Graph& g, const graph::TriSplit& split,
                          const features::FeatureMatrix* feats, double eval_neg_ratio,
                          uint64_t seed);

// Transductive variant: edges split by ratio/val_fraction, all nodes visible.
TrainData make_train_data_transductive(const graph::Graph& g, double ratio, double val_fraction,
                                       const features::FeatureMatrix* feats,
                                       double eval_neg_ratio, uint64_t seed);

struct EvalMetrics {
  double loss = 0, acc = 0, auc = 0, ap = 0;
};

// Type-erased model + decoder pair bound to a (graph, walks) context.
class LinkScorer {
 public:
  virtual ~LinkScorer() = default;
  virtual std::vector<ad::Tensor<float>> parameters() = 0;
  virtual void bind(const graph::Graph* g, const sampler::WalkTable* walks) = 0;
  virtual sampler::BlockBuilder builder() = 0;  // null when blocks are unused
  virtual ad::Tensor<float> score_batch(const sampler::LinkBatch& batch, bool train_mode,
                                        ad::DropKey key) = 0;
  // Embeddings for explicit nodes under the bound context (eval mode).
  virtual Matf encode_nodes(std::span<const uint32_t> nodes, uint64_t seed) = 0;
  // Decoder logits for local row pairs of an encode_nodes result.
  virtual std::vector<double> pair_logits(const Matf& emb,
                                          const std::vector<std::pair<uint32_t, uint32_t>>& pairs) = 0;
  virtual void load_params(const ad::Checkpoint& ckpt) = 0;
};

std::unique_ptr<LinkScorer> make_scorer(const TrainConfig& cfg, const TrainData& data,
                                        uint64_t seed);

// Deterministic evaluation of a labeled set under the scorer's current
// binding (dropout off, fixed-order batches).
EvalMetrics evaluate_split(LinkScorer& scorer, const TrainConfig& cfg,
                           const graph::LabeledEdgeSet& set, uint64_t eval_seed);

struct TrainResult {
  std::vector<EpochStats> history;
  ad::Checkpoint best;  // parameters at the best validation AUC
  int best_epoch = -1;
  double best_val_auc = 0.0;
  std::unique_ptr<LinkScorer> scorer;  // bound to train context, best params loaded
};

TrainResult train(const TrainConfig& cfg, const TrainData& data, uint64_t seed,
                  std::ostream* log = nullptr);

struct MetricsReport {
  std::vector<uint64_t> seeds;
  std::vector<EvalMetrics> per_seed_val;
  std::vector<int> per_seed_best_epoch;
  // mean +/- sample std across seeds; std omitted (0) for a single seed
  EvalMetrics mean;
  EvalMetrics stddev;
  bool has_std = false;
};

MetricsReport replicate(const TrainConfig& cfg, const TrainData& data,
                        std::span<const uint64_t> seeds, std::ostream* log = nullptr);

struct SearchSpace {
  std::map<std::string, std::vector<nlohmann::json>> params;
};

struct TrialResult {
  nlohmann::json drawn;
  double val_auc = 0;
  double val_ap = 0;
  double val_loss = 0;
  int best_epoch = -1;
  int trial_index = -1;
};

struct SearchResult {
  TrainConfig best_config;
  nlohmann::json best_drawn;
  double best_val_auc = -1;
  std::vector<TrialResult> trials;
};

// Uniform independent draws (deduplicated against earlier trials); each
// trial trains with early stopping; best by validation AUC, ties by lower
// best-epoch. `trial_log` receives one JSON object per line.
SearchResult random_search(const SearchSpace& space, int trials, const TrainConfig& base,
                           const TrainData& data, uint64_t seed,
                           std::ostream* trial_log = nullptr);

// Applies one drawn assignment onto a config; throws ConfigError on unknown
// keys (used by random_search and the config loader).
void apply_search_assignment(TrainConfig& cfg, const std::string& key,
                             const nlohmann::json& value);

struct RankingMetrics {
  double recall = 0;
  double ndcg = 0;
  int k = 10;
  std::size_t queries = 0;
};

// Candidate-set protocol: for each test node with >= 1 true test neighbor,
// rank its true neighbors against `num_negatives` seeded random
// non-neighbors drawn inside the test node set.
RankingMetrics ranking_eval(LinkScorer& scorer, const TrainData& data, int k,
                            std::size_t num_negatives, uint64_t seed);

// Fresh-random-embedding LightGCN scoring of an edge set over an eval
// subgraph: what an ID-embedding model can do for nodes it never saw.
EvalMetrics lightgcn_inductive_eval(const TrainConfig& cfg, const graph::Graph& eval_graph,
                                    const graph::LabeledEdgeSet& set, uint64_t seed);

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace copg::trainer

#endif  // COPG_TRAINER_HPP_
