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

#include "copg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "copg/csv.hpp"
#include "copg/metrics.hpp"
#include "copg/rng.hpp"

namespace copg::trainer {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lightgcn") return ModelKind::kLightGcn;
  if (s == "graphsage") return ModelKind::kGraphSage;
  if (s == "gat") return ModelKind::kGat;
  if (s == "pinsage") return ModelKind::kPinSage;
  throw ContractError("unknown model kind: " + s);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLightGcn: return "lightgcn";
    case ModelKind::kGraphSage: return "graphsage";
    case ModelKind::kGat: return "gat";
    case ModelKind::kPinSage: return "pinsage";
  }
  return "?";
}

TrainConfig default_config(ModelKind kind) {
  TrainConfig cfg;
  cfg.model = kind;
  switch (kind) {
    case ModelKind::kGraphSage:
      cfg.model_cfg.hidden_dim = 32;
      cfg.model_cfg.out_dim = 32;
      cfg.model_cfg.num_layers = 2;
      cfg.model_cfg.dropout = 0.3;
      cfg.model_cfg.mlp_layers = 2;
      cfg.loss = {LossConfig::Kind::kBceLogits, 2.0, 2.0};
      cfg.lr = ad::LrSchedule::constant(0.001);
      cfg.epochs = 100;
      cfg.batch_size = 512;
      cfg.neg_ratio = 0.3;
      cfg.fanout = {5, 5};
      cfg.weight_decay = 1e-4;
      break;
    case ModelKind::kGat:
      cfg.model_cfg.hidden_dim = 256;
      cfg.model_cfg.heads = 2;
      cfg.model_cfg.out_dim = 512;
      cfg.model_cfg.num_layers = 2;
      cfg.model_cfg.dropout = 0.05;
      cfg.model_cfg.leaky_slope = 0.2;
      cfg.loss = {LossConfig::Kind::kFocal, 2.5, 2.0};
      cfg.lr = ad::LrSchedule::multistep(0.005, {60, 100, 140}, 0.1);
      cfg.epochs = 150;
      cfg.batch_size = 1024;
      cfg.neg_ratio = 0.3;
      cfg.fanout = {10, 10};
      cfg.weight_decay = 1e-4;
      break;
    case ModelKind::kPinSage:
      cfg.model_cfg.hidden_dim = 256;
      cfg.model_cfg.out_dim = 128;
      cfg.model_cfg.num_layers = 3;
      cfg.model_cfg.dropout = 0.25;
      cfg.model_cfg.num_walks = 15;
      cfg.model_cfg.walk_length = 5;
      cfg.model_cfg.walk_topk = 8;
      cfg.model_cfg.neighbors_per_hop = 8;
      cfg.loss = {LossConfig::Kind::kBceLogits, 1.0, 2.0};
      cfg.lr = ad::LrSchedule::constant(1e-4);
      cfg.epochs = 30;
      cfg.batch_size = 512;
      cfg.neg_ratio = 1.0;
      cfg.fanout = {8, 8, 8};
      cfg.weight_decay = 4e-5;
      break;
    case ModelKind::kLightGcn:
      cfg.model_cfg.emb_dim = 128;
      cfg.model_cfg.num_layers = 2;
      cfg.loss = {LossConfig::Kind::kBceLogits, 2.0, 2.0};
      cfg.lr = ad::LrSchedule::constant(0.001);
      cfg.epochs = 100;
      cfg.batch_size = 1024;
      cfg.neg_ratio = 1.0;
      cfg.fanout = {};
      cfg.weight_decay = 1e-3;
      break;
  }
  return cfg;
}

namespace {

Matf labels_to_mat(const std::vector<uint8_t>& labels) {
  Matf m(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = static_cast<float>(labels[i]);
  return m;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss_scalar(std::span<const double> logits, std::span<const uint8_t> labels,
                   const LossConfig& loss) {
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const bool y = labels[i] != 0;
    if (loss.kind == LossConfig::Kind::kBceLogits) {
      acc += y ? loss.pos_weight * softplus(-z) : softplus(z);
    } else {
      const double t = y ? z : -z;
      const double alpha = y ? loss.pos_weight : 1.0;
      acc += -alpha * std::pow(sigmoid(-t), loss.gamma) * (-softplus(-t));
    }
  }
  return logits.empty() ? 0.0 : acc / static_cast<double>(logits.size());
}

ad::Tensor<float> loss_tensor(ad::Tensor<float> logits, const std::vector<uint8_t>& labels,
                              const LossConfig& loss) {
  Matf lab = labels_to_mat(labels);
  if (loss.kind == LossConfig::Kind::kBceLogits) {
    return ad::bce_with_logits(logits, lab, loss.pos_weight);
  }
  return ad::focal_loss(logits, lab, loss.gamma, loss.pos_weight);
}

// Local index of an edge endpoint within the sorted unique output list.
uint32_t locate_in(const std::vector<uint32_t>& sorted_nodes, uint32_t node) {
  auto it = std::lower_bound(sorted_nodes.begin(), sorted_nodes.end(), node);
  if (it == sorted_nodes.end() || *it != node) {
    throw ContractError("endpoint missing from block output nodes");
  }
  return static_cast<uint32_t>(it - sorted_nodes.begin());
}

sampler::FanoutSpec full_fanout(std::size_t depth) {
  return sampler::FanoutSpec(depth, 0x7fffffffu);
}

// ---- scorers ----------------------------------------------------------------

class SageScorer final : public LinkScorer {
 public:
  SageScorer(const TrainConfig& cfg, const Matf* feats, uint64_t seed) : feats_(feats) {
    models::SageConfig sc;
    sc.in_dim = static_cast<int>(feats->cols());
    sc.hidden_dim = cfg.model_cfg.hidden_dim;
    sc.out_dim = cfg.model_cfg.out_dim;
    sc.num_layers = cfg.model_cfg.num_layers;
    sc.dropout = cfg.model_cfg.dropout;
    sc.concat_aggregator = cfg.model_cfg.concat_aggregator;
    model_ = models::SageModel<float>::init(sc, seed);
    models::MlpDecoderConfig dc;
    dc.in_dim = sc.out_dim;
    dc.num_layers = cfg.model_cfg.mlp_layers;
    dc.hidden_dim = sc.out_dim;
    dc.dropout = cfg.model_cfg.dropout;
    decoder_ = models::MlpDecoder<float>::init(dc, rng::derive(seed, 0xdec0de));
    fanout_ = cfg.fanout;
  }

  std::vector<ad::Tensor<float>> parameters() override {
    auto out = model_.parameters();
    for (auto& p : decoder_.parameters()) out.push_back(p);
    return out;
  }

  void bind(const graph::Graph* g, const sampler::WalkTable*) override { g_ = g; }

  sampler::BlockBuilder builder() override {
    const graph::Graph* g = g_;
    auto fanout = fanout_;
    return [g, fanout](std::span<const uint32_t> seeds, uint64_t s) {
      return sampler::sample_block(*g, seeds, fanout, s);
    };
  }

  ad::Tensor<float> score_batch(const sampler::LinkBatch& batch, bool train_mode,
                                ad::DropKey key) override {
    auto h = model_.forward(batch.block, *feats_, train_mode, key);
    const auto& out_nodes = batch.block.output_nodes();
    std::vector<uint32_t> iu, iv;
    iu.reserve(batch.edges.size());
    iv.reserve(batch.edges.size());
    for (const auto& [u, v] : batch.edges) {
      iu.push_back(locate_in(out_nodes, u));
      iv.push_back(locate_in(out_nodes, v));
    }
    key.op_id = 0x900;
    return decoder_.decode_logits(ad::row_gather(h, iu), ad::row_gather(h, iv), train_mode, key);
  }

  Matf encode_nodes(std::span<const uint32_t> nodes, uint64_t seed) override {
    auto block = sampler::sample_block(*g_, nodes, full_fanout(fanout_.size()), seed);
    auto h = model_.forward(block, *feats_, false, {});
    const auto& out_nodes = block.output_nodes();
    Matf out(nodes.size(), h->value.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const uint32_t local = locate_in(out_nodes, nodes[r]);
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = h->value(local, c);
    }
    return out;
  }

  std::vector<double> pair_logits(const Matf& emb,
                                  const std::vector<std::pair<uint32_t, uint32_t>>& pairs) override {
    std::vector<uint32_t> iu, iv;
    for (const auto& [u, v] : pairs) {
      iu.push_back(u);
      iv.push_back(v);
    }
    auto e = ad::constant(emb);
    auto logits =
        decoder_.decode_logits(ad::row_gather(e, iu), ad::row_gather(e, iv), false, {});
    std::vector<double> out(logits->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits->value[i];
    return out;
  }

  void load_params(const ad::Checkpoint& ckpt) override { load_by_name(ckpt, parameters()); }

  static void load_by_name(const ad::Checkpoint& ckpt,
                           const std::vector<ad::Tensor<float>>& params) {
    for (const auto& p : params) {
      bool found = false;
      for (const auto& [name, mat] : ckpt.params) {
        if (name == p->name) {
          if (!mat.same_shape(p->value)) throw ShapeMismatch("checkpoint param " + name);
          p->value = mat;
          found = true;
          break;
        }
      }
      if (!found) throw ContractError("checkpoint missing parameter " + p->name);
    }
  }

 private:
  const Matf* feats_;
  const graph::Graph* g_ = nullptr;
  models::SageModel<float> model_;
  models::MlpDecoder<float> decoder_;
  sampler::FanoutSpec fanout_;
};

class GatScorer final : public LinkScorer {
 public:
  GatScorer(const TrainConfig& cfg, const Matf* feats, uint64_t seed) : feats_(feats) {
    models::GatConfig gc;
    gc.in_dim = static_cast<int>(feats->cols());
    gc.hidden_dim = cfg.model_cfg.hidden_dim;
    gc.heads_l1 = cfg.model_cfg.heads;
    gc.out_dim = cfg.model_cfg.hidden_dim * cfg.model_cfg.heads;
    gc.dropout = cfg.model_cfg.dropout;
    gc.leaky_slope = cfg.model_cfg.leaky_slope;
    model_ = models::GatModel<float>::init(gc, seed);
    fanout_ = cfg.fanout;
    if (fanout_.size() != 2) throw ContractError("gat requires a depth-2 fanout");
  }

  std::vector<ad::Tensor<float>> parameters() override { return model_.parameters(); }

  void bind(const graph::Graph* g, const sampler::WalkTable*) override { g_ = g; }

  sampler::BlockBuilder builder() override {
    const graph::Graph* g = g_;
    auto fanout = fanout_;
    return [g, fanout](std::span<const uint32_t> seeds, uint64_t s) {
      return sampler::sample_block(*g, seeds, fanout, s);
    };
  }

  ad::Tensor<float> score_batch(const sampler::LinkBatch& batch, bool train_mode,
                                ad::DropKey key) override {
    auto h = model_.forward(batch.block, *feats_, train_mode, key);
    const auto& out_nodes = batch.block.output_nodes();
    std::vector<uint32_t> iu, iv;
    for (const auto& [u, v] : batch.edges) {
      iu.push_back(locate_in(out_nodes, u));
      iv.push_back(locate_in(out_nodes, v));
    }
    return models::dot_decode(ad::row_gather(h, iu), ad::row_gather(h, iv));
  }

  Matf encode_nodes(std::span<const uint32_t> nodes, uint64_t seed) override {
    auto block = sampler::sample_block(*g_, nodes, full_fanout(2), seed);
    auto h = model_.forward(block, *feats_, false, {});
    const auto& out_nodes = block.output_nodes();
    Matf out(nodes.size(), h->value.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const uint32_t local = locate_in(out_nodes, nodes[r]);
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = h->value(local, c);
    }
    return out;
  }

  std::vector<double> pair_logits(const Matf& emb,
                                  const std::vector<std::pair<uint32_t, uint32_t>>& pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
      double acc = 0.0;
      for (std::size_t c = 0; c < emb.cols(); ++c) {
        acc += static_cast<double>(emb(u, c)) * static_cast<double>(emb(v, c));
      }
      out.push_back(acc);
    }
    return out;
  }

  void load_params(const ad::Checkpoint& ckpt) override {
    SageScorer::load_by_name(ckpt, parameters());
  }

 private:
  const Matf* feats_;
  const graph::Graph* g_ = nullptr;
  models::GatModel<float> model_;
  sampler::FanoutSpec fanout_;
};

class PinSageScorer final : public LinkScorer {
 public:
  PinSageScorer(const TrainConfig& cfg, const Matf* feats, uint64_t seed) : feats_(feats) {
    models::PinSageConfig pc;
    pc.in_dim = static_cast<int>(feats->cols());
    pc.hidden_dim = cfg.model_cfg.hidden_dim;
    pc.out_dim = cfg.model_cfg.out_dim;
    pc.num_layers = cfg.model_cfg.num_layers;
    pc.dropout = cfg.model_cfg.dropout;
    pc.neighbors_per_hop = cfg.model_cfg.neighbors_per_hop;
    model_ = models::PinSageModel<float>::init(pc, seed);
  }

  std::vector<ad::Tensor<float>> parameters() override { return model_.parameters(); }

  void bind(const graph::Graph* g, const sampler::WalkTable* walks) override {
    g_ = g;
    walks_ = walks;
    if (!walks_) throw ContractError("pinsage scorer needs a walk table");
  }

  sampler::BlockBuilder builder() override {
    const sampler::WalkTable* walks = walks_;
    const auto depth = static_cast<uint32_t>(model_.cfg.num_layers);
    const auto cap = model_.cfg.neighbors_per_hop;
    return [walks, depth, cap](std::span<const uint32_t> seeds, uint64_t s) {
      return sampler::importance_block(*walks, seeds, depth, cap, s);
    };
  }

  ad::Tensor<float> score_batch(const sampler::LinkBatch& batch, bool train_mode,
                                ad::DropKey key) override {
    auto h = model_.forward(batch.block, *feats_, train_mode, key);
    const auto& out_nodes = batch.block.output_nodes();
    std::vector<uint32_t> iu, iv;
    for (const auto& [u, v] : batch.edges) {
      iu.push_back(locate_in(out_nodes, u));
      iv.push_back(locate_in(out_nodes, v));
    }
    return models::dot_decode(ad::row_gather(h, iu), ad::row_gather(h, iv));
  }

  Matf encode_nodes(std::span<const uint32_t> nodes, uint64_t seed) override {
    auto block = sampler::importance_block(*walks_, nodes,
                                           static_cast<uint32_t>(model_.cfg.num_layers),
                                           model_.cfg.neighbors_per_hop, seed);
    auto h = model_.forward(block, *feats_, false, {});
    const auto& out_nodes = block.output_nodes();
    Matf out(nodes.size(), h->value.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const uint32_t local = locate_in(out_nodes, nodes[r]);
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = h->value(local, c);
    }
    return out;
  }

  std::vector<double> pair_logits(const Matf& emb,
                                  const std::vector<std::pair<uint32_t, uint32_t>>& pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
      double acc = 0.0;
      for (std::size_t c = 0; c < emb.cols(); ++c) {
        acc += static_cast<double>(emb(u, c)) * static_cast<double>(emb(v, c));
      }
      out.push_back(acc);
    }
    return out;
  }

  void load_params(const ad::Checkpoint& ckpt) override {
    SageScorer::load_by_name(ckpt, parameters());
  }

 private:
  const Matf* feats_;
  const graph::Graph* g_ = nullptr;
  const sampler::WalkTable* walks_ = nullptr;
  models::PinSageModel<float> model_;
};

class LightGcnScorer final : public LinkScorer {
 public:
  LightGcnScorer(const TrainConfig& cfg, uint64_t num_nodes, uint64_t seed) {
    models::LightGcnConfig lc;
    lc.num_nodes = num_nodes;
    lc.emb_dim = cfg.model_cfg.emb_dim;
    lc.num_layers = cfg.model_cfg.num_layers;
    lc.combine = cfg.model_cfg.lightgcn_combine == "sum"
                     ? models::LightGcnConfig::Combine::kSum
                     : models::LightGcnConfig::Combine::kMean;
    lc.norm = cfg.model_cfg.lightgcn_norm == "mean" ? models::LightGcnConfig::Norm::kMean
                                                    : models::LightGcnConfig::Norm::kSymmetric;
    model_ = models::LightGcnModel<float>::init(lc, seed);
  }

  std::vector<ad::Tensor<float>> parameters() override { return model_.parameters(); }

  void bind(const graph::Graph* g, const sampler::WalkTable*) override { g_ = g; }

  sampler::BlockBuilder builder() override { return nullptr; }

  ad::Tensor<float> score_batch(const sampler::LinkBatch& batch, bool, ad::DropKey) override {
    auto all = model_.forward(*g_);
    std::vector<uint32_t> iu, iv;
    for (const auto& [u, v] : batch.edges) {
      iu.push_back(u);
      iv.push_back(v);
    }
    return models::dot_decode(ad::row_gather(all, iu), ad::row_gather(all, iv));
  }

  Matf encode_nodes(std::span<const uint32_t> nodes, uint64_t) override {
    auto all = model_.forward(*g_);
    Matf out(nodes.size(), all->value.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = all->value(nodes[r], c);
    }
    return out;
  }

  std::vector<double> pair_logits(const Matf& emb,
                                  const std::vector<std::pair<uint32_t, uint32_t>>& pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
      double acc = 0.0;
      for (std::size_t c = 0; c < emb.cols(); ++c) {
        acc += static_cast<double>(emb(u, c)) * static_cast<double>(emb(v, c));
      }
      out.push_back(acc);
    }
    return out;
  }

  void load_params(const ad::Checkpoint& ckpt) override {
    SageScorer::load_by_name(ckpt, parameters());
  }

 private:
  const graph::Graph* g_ = nullptr;
  models::LightGcnModel<float> model_;
};

}  // namespace

std::unique_ptr<LinkScorer> make_scorer(const TrainConfig& cfg, const TrainData& data,
                                        uint64_t seed) {
  if (cfg.model != ModelKind::kLightGcn && !data.feats) {
    throw ContractError("feature matrix required for " + to_string(cfg.model));
  }
  switch (cfg.model) {
    case ModelKind::kGraphSage:
      if (cfg.fanout.size() != static_cast<std::size_t>(cfg.model_cfg.num_layers)) {
        throw ContractError("fanout length must equal model depth");
      }
      return std::make_unique<SageScorer>(cfg, &data.feats->data, seed);
    case ModelKind::kGat:
      return std::make_unique<GatScorer>(cfg, &data.feats->data, seed);
    case ModelKind::kPinSage:
      return std::make_unique<PinSageScorer>(cfg, &data.feats->data, seed);
    case ModelKind::kLightGcn:
      return std::make_unique<LightGcnScorer>(cfg, data.full_graph->num_nodes(), seed);
  }
  throw ContractError("unreachable model kind");
}

// ---- data assembly ------------------------------------------------------------

TrainData make_train_data(const graph::Graph& g, const graph::TriSplit& split,
                          const features::FeatureMatrix* feats, double eval_neg_ratio,
                          uint64_t seed) {
  TrainData data;
  data.full_graph = &g;
  data.feats = feats;
  data.transductive = false;
  data.train_nodes = split.nodes_with(graph::Role::kTrain);
  data.val_nodes = split.nodes_with(graph::Role::kVal);
  data.test_nodes = split.nodes_with(graph::Role::kTest);

  auto keep_mask = [&](graph::Role r) {
    std::vector<uint8_t> keep(g.num_nodes(), 0);
    for (uint32_t u = 0; u < g.num_nodes(); ++u) {
      keep[u] = split.role[u] == static_cast<uint8_t>(r);
    }
    return keep;
  };
  data.train_graph = graph::induced_subgraph(g, keep_mask(graph::Role::kTrain));
  data.val_graph = graph::induced_subgraph(g, keep_mask(graph::Role::kVal));
  data.test_graph = graph::induced_subgraph(g, keep_mask(graph::Role::kTest));

  data.train_pos = graph::edges_within(g, split, graph::Role::kTrain);
  auto val_pos = graph::edges_within(g, split, graph::Role::kVal);
  auto test_pos = graph::edges_within(g, split, graph::Role::kTest);

  auto eval_set = [&](const graph::EdgeList& pos, const std::vector<uint32_t>& nodes,
                      uint64_t tag) {
    if (pos.edges.empty()) return graph::LabeledEdgeSet{};
    const auto count = static_cast<std::size_t>(
        std::ceil(eval_neg_ratio * static_cast<double>(pos.edges.size())));
    auto neg = graph::sample_negative_count(g, count, rng::derive(seed, tag), &nodes);
    return graph::make_labeled(pos, neg);
  };
  data.val_set = eval_set(val_pos, data.val_nodes, 0x76616c);
  data.test_set = eval_set(test_pos, data.test_nodes, 0x746573);
  return data;
}

TrainData make_train_data_transductive(const graph::Graph& g, double ratio, double val_fraction,
                                       const features::FeatureMatrix* feats,
                                       double eval_neg_ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("split ratio must be in (0,1)");
  TrainData data;
  data.full_graph = &g;
  data.feats = feats;
  data.transductive = true;
  data.train_nodes.resize(g.num_nodes());
  for (uint32_t i = 0; i < g.num_nodes(); ++i) data.train_nodes[i] = i;
  data.val_nodes = data.train_nodes;
  data.test_nodes = data.train_nodes;

  auto edges = g.edge_list();
  rng::Rng shuffler(rng::derive(seed, 0x65646765));
  shuffler.shuffle(edges);
  const auto train_count =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(edges.size())));
  const auto val_count = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(train_count)));

  graph::EdgeList val_pos, test_pos;
  test_pos.edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(train_count), edges.end());
  val_pos.edges.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(val_count));
  data.train_pos.edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(val_count),
                              edges.begin() + static_cast<std::ptrdiff_t>(train_count));
  data.train_pos.canonicalize();
  val_pos.canonicalize();
  test_pos.canonicalize();

  // Message passing sees only the training edges; all nodes stay visible.
  data.train_graph = graph::subgraph_from_edges(g.num_nodes(), data.train_pos);
  data.val_graph = data.train_graph;
  data.test_graph = data.train_graph;

  auto eval_set = [&](const graph::EdgeList& pos, uint64_t tag) {
    if (pos.edges.empty()) return graph::LabeledEdgeSet{};
    const auto count = static_cast<std::size_t>(
        std::ceil(eval_neg_ratio * static_cast<double>(pos.edges.size())));
    auto neg = graph::sample_negative_count(g, count, rng::derive(seed, tag), nullptr);
    return graph::make_labeled(pos, neg);
  };
  data.val_set = eval_set(val_pos, 0x76616c);
  data.test_set = eval_set(test_pos, 0x746573);
  return data;
}

// ---- evaluation -----------------------------------------------------------------

EvalMetrics evaluate_split(LinkScorer& scorer, const TrainConfig& cfg,
                           const graph::LabeledEdgeSet& set, uint64_t eval_seed) {
  EvalMetrics out;
  if (set.edges.empty()) return out;
  std::vector<double> logits;
  logits.reserve(set.size());
  auto builder = scorer.builder();
  for (std::size_t at = 0, chunk = 0; at < set.size(); at += cfg.batch_size, ++chunk) {
    const std::size_t end = std::min(set.size(), at + cfg.batch_size);
    sampler::LinkBatch batch;
    std::vector<uint32_t> endpoints;
    for (std::size_t i = at; i < end; ++i) {
      batch.edges.push_back(set.edges[i]);
      batch.labels.push_back(set.labels[i]);
      endpoints.push_back(set.edges[i].first);
      endpoints.push_back(set.edges[i].second);
    }
    if (builder) batch.block = builder(endpoints, rng::derive(eval_seed, 0xe7a1, chunk));
    ad::DropKey key{eval_seed, 0, chunk, 0};
    auto t = scorer.score_batch(batch, /*train_mode=*/false, key);
    for (std::size_t i = 0; i < t->value.size(); ++i) {
      logits.push_back(static_cast<double>(t->value[i]));
    }
  }
  out.loss = loss_scalar(logits, set.labels, cfg.loss);
  std::vector<double> probs(logits.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = sigmoid(logits[i]);
    const uint8_t pred = probs[i] > 0.5 ? 1 : 0;
    if (pred == set.labels[i]) ++correct;
  }
  out.acc = static_cast<double>(correct) / static_cast<double>(probs.size());
  out.auc = metrics::auc(probs, set.labels);
  out.ap = metrics::average_precision(probs, set.labels);
  return out;
}

// ---- training -------------------------------------------------------------------

TrainResult train(const TrainConfig& cfg, const TrainData& data, uint64_t seed,
                  std::ostream* log) {
  if (cfg.epochs < 1) throw ContractError("epochs must be >= 1");

  auto scorer = make_scorer(cfg, data, seed);

  // Walk tables for the importance sampler, computed when not preloaded.
  std::optional<sampler::WalkTable> train_walks, val_walks;
  const sampler::WalkTable* train_walks_ptr = nullptr;
  const sampler::WalkTable* val_walks_ptr = nullptr;
  if (cfg.model == ModelKind::kPinSage) {
    if (data.train_walks) {
      train_walks_ptr = &*data.train_walks;
    } else {
      train_walks = sampler::precompute_walks(data.train_graph, cfg.model_cfg.num_walks,
                                              cfg.model_cfg.walk_length, cfg.model_cfg.walk_topk,
                                              rng::derive(seed, 0x77616c6b));
      train_walks_ptr = &*train_walks;
    }
    val_walks = sampler::precompute_walks(data.val_graph, cfg.model_cfg.num_walks,
                                          cfg.model_cfg.walk_length, cfg.model_cfg.walk_topk,
                                          rng::derive(seed, 0x77616c76));
    val_walks_ptr = &*val_walks;
  }

  scorer->bind(&data.train_graph, train_walks_ptr);
  auto params = scorer->parameters();
  ad::AdamConfig acfg;
  acfg.lr = cfg.lr.lr_at(0);
  acfg.weight_decay = cfg.weight_decay;
  ad::Adam<float> adam(params, acfg);

  EarlyStopper stopper(cfg.patience);
  TrainResult result;

  auto snapshot = [&]() {
    ad::Checkpoint snap;
    for (const auto& p : params) snap.params.emplace_back(p->name, p->value);
    snap.has_optimizer = false;
    return snap;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    adam.set_lr(cfg.lr.lr_at(epoch - 1));

    scorer->bind(&data.train_graph, train_walks_ptr);
    auto batches =
        sampler::link_batches(data.train_pos, data.train_graph, data.train_nodes, cfg.batch_size,
                              cfg.neg_ratio, scorer->builder(), rng::derive(seed, 0x657063),
                              static_cast<uint64_t>(epoch));

    graph::LabeledEdgeSet epoch_set;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      ad::DropKey key{seed, static_cast<uint64_t>(epoch), bi, 0};
      auto logits = scorer->score_batch(batch, /*train_mode=*/true, key);
      auto loss = loss_tensor(logits, batch.labels, cfg.loss);
      const double loss_value = static_cast<double>(loss->value[0]);
      if (!std::isfinite(loss_value)) throw NonFiniteLoss(bi);
      ad::backward(loss);
      adam.step();

      epoch_set.edges.insert(epoch_set.edges.end(), batch.edges.begin(), batch.edges.end());
      epoch_set.labels.insert(epoch_set.labels.end(), batch.labels.begin(), batch.labels.end());
    }

    EpochStats stats;
    stats.epoch = epoch;
    // Train metrics come from a dropout-off pass over this epoch's labeled
    // set, so they describe the end-of-epoch model.
    const auto train_eval = evaluate_split(*scorer, cfg, epoch_set, cfg.eval_seed);
    stats.train_loss = train_eval.loss;
    stats.train_acc = train_eval.acc;
    stats.train_auc = train_eval.auc;
    stats.train_ap = train_eval.ap;

    scorer->bind(&data.val_graph, val_walks_ptr);
    const auto val = evaluate_split(*scorer, cfg, data.val_set, cfg.eval_seed);
    stats.val_loss = val.loss;
    stats.val_acc = val.acc;
    stats.val_auc = val.auc;
    stats.val_ap = val.ap;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(stats);

    if (stopper.observe(val.auc, epoch)) {
      result.best = snapshot();
      result.best_epoch = epoch;
      result.best_val_auc = val.auc;
    }
    if (log) {
      (*log) << "epoch " << epoch << " train_loss " << stats.train_loss << " train_auc "
             << stats.train_auc << " val_auc " << stats.val_auc << " ("
             << stopper.epochs_since_improvement() << "/" << cfg.patience << ")\n";
    }
    if (stopper.should_stop()) break;
  }

  if (result.best_epoch < 0) {
    result.best = snapshot();
    result.best_epoch = static_cast<int>(result.history.size());
  }
  scorer->load_params(result.best);
  scorer->bind(&data.train_graph, train_walks_ptr);
  result.scorer = std::move(scorer);
  return result;
}

MetricsReport replicate(const TrainConfig& cfg, const TrainData& data,
                        std::span<const uint64_t> seeds, std::ostream* log) {
  if (seeds.empty()) throw ContractError("replicate needs >= 1 seed");
  MetricsReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  for (uint64_t s : seeds) {
    auto result = train(cfg, data, s, log);
    EvalMetrics best_val;
    if (!result.history.empty()) {
      const auto& row = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
      best_val = {row.val_loss, row.val_acc, row.val_auc, row.val_ap};
    }
    report.per_seed_val.push_back(best_val);
    report.per_seed_best_epoch.push_back(result.best_epoch);
  }
  const auto n = static_cast<double>(seeds.size());
  auto accumulate = [&](auto getter) {
    double mean = 0.0;
    for (const auto& m : report.per_seed_val) mean += getter(m);
    mean /= n;
    double var = 0.0;
    for (const auto& m : report.per_seed_val) {
      const double d = getter(m) - mean;
      var += d * d;
    }
    const double sd = seeds.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return std::pair<double, double>(mean, sd);
  };
  std::tie(report.mean.loss, report.stddev.loss) =
      accumulate([](const EvalMetrics& m) { return m.loss; });
  std::tie(report.mean.acc, report.stddev.acc) =
      accumulate([](const EvalMetrics& m) { return m.acc; });
  std::tie(report.mean.auc, report.stddev.auc) =
      accumulate([](const EvalMetrics& m) { return m.auc; });
  std::tie(report.mean.ap, report.stddev.ap) =
      accumulate([](const EvalMetrics& m) { return m.ap; });
  report.has_std = seeds.size() > 1;
  return report;
}

// ---- random search ---------------------------------------------------------------

void apply_search_assignment(TrainConfig& cfg, const std::string& key,
                             const nlohmann::json& value) {
  auto as_int = [&]() { return value.get<int>(); };
  auto as_double = [&]() { return value.get<double>(); };
  if (key == "hidden_dim") cfg.model_cfg.hidden_dim = as_int();
  else if (key == "out_dim") cfg.model_cfg.out_dim = as_int();
  else if (key == "num_layers") cfg.model_cfg.num_layers = as_int();
  else if (key == "mlp_layers") cfg.model_cfg.mlp_layers = as_int();
  else if (key == "heads") cfg.model_cfg.heads = as_int();
  else if (key == "emb_dim") cfg.model_cfg.emb_dim = as_int();
  else if (key == "dropout") cfg.model_cfg.dropout = as_double();
  else if (key == "lr") cfg.lr.base = as_double();
  else if (key == "batch_size") cfg.batch_size = static_cast<std::size_t>(as_int());
  else if (key == "weight_decay") cfg.weight_decay = as_double();
  else if (key == "neg_ratio") cfg.neg_ratio = as_double();
  else if (key == "pos_weight") cfg.loss.pos_weight = as_double();
  else if (key == "gamma") cfg.loss.gamma = as_double();
  else if (key == "epochs") cfg.epochs = as_int();
  else if (key == "patience") cfg.patience = as_int();
  else if (key == "fanout") {
    cfg.fanout.clear();
    for (const auto& v : value) cfg.fanout.push_back(v.get<uint32_t>());
  } else {
    throw ConfigError("/search/space/" + key, "unknown search parameter");
  }
}

SearchResult random_search(const SearchSpace& space, int trials, const TrainConfig& base,
                           const TrainData& data, uint64_t seed, std::ostream* trial_log) {
  if (trials < 1) throw ContractError("random search needs >= 1 trial");
  for (const auto& [key, values] : space.params) {
    if (values.empty()) throw ConfigError("/search/space/" + key, "empty value set");
  }

  // Size of the grid, saturating; dedup stops early once exhausted.
  std::size_t grid = 1;
  for (const auto& [_, values] : space.params) {
    if (grid > (1u << 20)) break;
    grid *= values.size();
  }

  rng::Rng gen(rng::derive(seed, 0x736561));
  std::unordered_set<std::string> tried;
  SearchResult out;
  int best_epoch_seen = std::numeric_limits<int>::max();
  for (int trial = 0; trial < trials; ++trial) {
    nlohmann::json drawn;
    std::string fingerprint;
    bool fresh = false;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      drawn = nlohmann::json::object();
      for (const auto& [key, values] : space.params) {
        drawn[key] = values[gen.bounded(values.size())];
      }
      fingerprint = drawn.dump();
      if (!tried.count(fingerprint)) {
        fresh = true;
        break;
      }
      if (tried.size() >= grid) break;
    }
    if (!fresh) break;  // grid exhausted
    tried.insert(fingerprint);

    TrainConfig cfg = base;
    for (const auto& [key, value] : drawn.items()) apply_search_assignment(cfg, key, value);

    auto result = train(cfg, data, base.seeds.empty() ? 1 : base.seeds[0], nullptr);
    TrialResult tr;
    tr.trial_index = trial;
    tr.drawn = drawn;
    tr.best_epoch = result.best_epoch;
    if (!result.history.empty()) {
      const auto& row = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
      tr.val_auc = row.val_auc;
      tr.val_ap = row.val_ap;
      tr.val_loss = row.val_loss;
    }
    out.trials.push_back(tr);
    if (trial_log) {
      nlohmann::json line = {{"trial", trial},       {"config", drawn},
                             {"val_auc", tr.val_auc}, {"val_ap", tr.val_ap},
                             {"val_loss", tr.val_loss}, {"best_epoch", tr.best_epoch}};
      (*trial_log) << line.dump() << "\n";
    }
    // Best by validation AUC; ties resolved toward the lower best epoch.
    const bool better = tr.val_auc > out.best_val_auc ||
                        (tr.val_auc == out.best_val_auc && tr.best_epoch < best_epoch_seen);
    if (out.best_drawn.is_null() || better) {
      out.best_val_auc = tr.val_auc;
      out.best_drawn = drawn;
      out.best_config = cfg;
      best_epoch_seen = tr.best_epoch;
    }
  }
  return out;
}

// ---- ranking ---------------------------------------------------------------------

RankingMetrics ranking_eval(LinkScorer& scorer, const TrainData& data, int k,
                            std::size_t num_negatives, uint64_t seed) {
  RankingMetrics out;
  out.k = k;
  if (data.test_nodes.size() < 2) return out;

  const Matf emb = scorer.encode_nodes(data.test_nodes, rng::derive(seed, 0x656e63));
  std::unordered_map<uint32_t, uint32_t> local;
  local.reserve(data.test_nodes.size());
  for (uint32_t i = 0; i < data.test_nodes.size(); ++i) local.emplace(data.test_nodes[i], i);

  std::vector<metrics::RankedQuery> queries;
  for (uint32_t qi = 0; qi < data.test_nodes.size(); ++qi) {
    const uint32_t u = data.test_nodes[qi];
    std::vector<uint32_t> relevant;
    for (uint32_t v : data.test_graph.neighbors(u)) {
      auto it = local.find(v);
      if (it != local.end()) relevant.push_back(it->second);
    }
    if (relevant.empty()) continue;

    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    metrics::RankedQuery q;
    for (uint32_t r : relevant) {
      pairs.emplace_back(qi, r);
      q.relevant.push_back(1);
    }
    rng::Rng gen(rng::derive(seed, 0x63616e64, u));
    std::unordered_set<uint32_t> used(relevant.begin(), relevant.end());
    used.insert(qi);
    std::size_t drawn = 0;
    const std::size_t available = data.test_nodes.size() - used.size();
    while (drawn < std::min(num_negatives, available)) {
      const auto cand = static_cast<uint32_t>(gen.bounded(data.test_nodes.size()));
      if (used.count(cand)) continue;
      const uint32_t cand_global = data.test_nodes[cand];
      if (data.full_graph->has_edge(u, cand_global)) continue;
      used.insert(cand);
      pairs.emplace_back(qi, cand);
      q.relevant.push_back(0);
      ++drawn;
    }
    const auto logits = scorer.pair_logits(emb, pairs);
    q.scores.assign(logits.begin(), logits.end());
    queries.push_back(std::move(q));
  }
  out.queries = queries.size();
  out.recall = metrics::recall_at_k(queries, k);
  out.ndcg = metrics::ndcg_at_k(queries, k);
  return out;
}

EvalMetrics lightgcn_inductive_eval(const TrainConfig& cfg, const graph::Graph& eval_graph,
                                    const graph::LabeledEdgeSet& set, uint64_t seed) {
  models::LightGcnConfig lc;
  lc.num_nodes = eval_graph.num_nodes();
  lc.emb_dim = cfg.model_cfg.emb_dim;
  lc.num_layers = cfg.model_cfg.num_layers;
  // Unseen nodes get nothing but fresh random embeddings. No propagation
  // runs here: the held-out subgraph's links are the prediction targets, so
  // an ID-embedding model has no message-passing substrate at cold start
  // (propagating over the evaluated edges would read the labels back).
  auto model = models::LightGcnModel<float>::init(lc, seed);
  const Matf& all = model.embeddings->value;

  std::vector<double> logits(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& [u, v] = set.edges[i];
    double acc = 0.0;
    for (std::size_t c = 0; c < all.cols(); ++c) {
      acc += static_cast<double>(all(u, c)) * static_cast<double>(all(v, c));
    }
    logits[i] = acc;
  }
  EvalMetrics out;
  out.loss = loss_scalar(logits, set.labels, cfg.loss);
  std::vector<double> probs(logits.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = sigmoid(logits[i]);
    if ((probs[i] > 0.5 ? 1 : 0) == set.labels[i]) ++correct;
  }
  out.acc = probs.empty() ? 0.0 : static_cast<double>(correct) / probs.size();
  out.auc = metrics::auc(probs, set.labels);
  out.ap = metrics::average_precision(probs, set.labels);
  return out;
}

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream os(path);
  if (!os) throw ContractError("cannot open for writing: " + path);
  csv::write_row(os, {"epoch", "train_loss", "train_acc", "train_auc", "train_ap", "val_loss",
                      "val_acc", "val_auc", "val_ap", "seconds"});
  for (const auto& h : history) {
    csv::write_row(os, {std::to_string(h.epoch), csv::format_double(h.train_loss),
                        csv::format_double(h.train_acc), csv::format_double(h.train_auc),
                        csv::format_double(h.train_ap), csv::format_double(h.val_loss),
                        csv::format_double(h.val_acc), csv::format_double(h.val_auc),
                        csv::format_double(h.val_ap), csv::format_double(h.seconds)});
  }
}

}  // namespace copg::trainer
