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

#ifndef COPG_MODELS_HPP_
#define COPG_MODELS_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "copg/autodiff.hpp"
#include "copg/block.hpp"
#include "copg/graph.hpp"
#include "copg/rng.hpp"

namespace copg::models {

using sampler::Block;
using sampler::BlockLayer;

// ---- init -------------------------------------------------------------------

template <typename T>
Mat<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, rng::Rng& gen) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat<T> m(fan_in, fan_out);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<T>((gen.uniform01() * 2.0 - 1.0) * limit);
  }
  return m;
}

template <typename T>
Mat<T> normal_init(std::size_t rows, std::size_t cols, double stddev, rng::Rng& gen) {
  Mat<T> m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<T>(gen.normal() * stddev);
  return m;
}

// Rows of a float feature matrix lifted to precision T.
template <typename T>
Mat<T> gather_feature_rows(const Matf& f, std::span<const uint32_t> ids) {
  Mat<T> out(ids.size(), f.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const float* src = f.row(ids[r]);
    for (std::size_t c = 0; c < f.cols(); ++c) out(r, c) = static_cast<T>(src[c]);
  }
  return out;
}

namespace detail {

inline std::vector<uint32_t> iota_u32(std::size_t n) {
  std::vector<uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

}  // namespace detail

// ---- graph propagation op (LightGCN) ----------------------------------------

enum class GcnNorm { kMean, kSymmetric };

// x (n x d) -> Norm(A) * x over the graph's CSR. Mean norm is D^-1 A;
// symmetric is D^-1/2 A D^-1/2 (self-adjoint, so it is its own transpose in
// the backward pass). Isolated nodes propagate zero.
template <typename T>
ad::Tensor<T> graph_propagate(const graph::Graph& g, ad::Tensor<T> x, GcnNorm norm) {
  if (x->value.rows() != g.num_nodes()) {
    throw ShapeMismatch("graph_propagate: rows must equal node count");
  }
  const std::size_t d = x->value.cols();
  Mat<T> out(x->value.rows(), d);
  const auto fwd_mode = norm == GcnNorm::kMean ? kernels::PropagateMode::kMean
                                               : kernels::PropagateMode::kSymmetric;
  kernels::propagate(g.offsets().data(), g.neighbor_ids().data(), g.num_nodes(), x->value.data(),
                     d, fwd_mode, out.data());
  const graph::Graph* gp = &g;  // caller keeps the graph alive for the backward pass
  return ad::detail::make_op<T>(std::move(out), {x}, [x, gp, d, norm](ad::Node<T>& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const auto bwd_mode = norm == GcnNorm::kMean ? kernels::PropagateMode::kMeanTranspose
                                                 : kernels::PropagateMode::kSymmetric;
    Mat<T> gx(self.grad.rows(), d);
    kernels::propagate(gp->offsets().data(), gp->neighbor_ids().data(), gp->num_nodes(),
                       self.grad.data(), d, bwd_mode, gx.data());
    for (std::size_t i = 0; i < gx.size(); ++i) x->grad[i] += gx[i];
  });
}

// ---- decoders -----------------------------------------------------------------

// logit = <h_u, h_v>; exactly symmetric under (u, v) swap.
template <typename T>
ad::Tensor<T> dot_decode(ad::Tensor<T> h_u, ad::Tensor<T> h_v) {
  return ad::rowwise_dot(h_u, h_v);
}

struct MlpDecoderConfig {
  int in_dim = 32;
  int num_layers = 2;  // counting the output layer
  int hidden_dim = 32;
  double dropout = 0.3;
};

template <typename T>
struct MlpDecoder {
  MlpDecoderConfig cfg;
  std::vector<ad::Tensor<T>> weights;
  std::vector<ad::Tensor<T>> biases;

  static MlpDecoder init(const MlpDecoderConfig& cfg, uint64_t seed) {
    if (cfg.num_layers < 1) throw ContractError("mlp decoder needs >= 1 layer");
    MlpDecoder m;
    m.cfg = cfg;
    rng::Rng gen(rng::derive(seed, 0x6d6c70));
    std::size_t in = static_cast<std::size_t>(cfg.in_dim);
    for (int l = 0; l < cfg.num_layers; ++l) {
      const bool last = l == cfg.num_layers - 1;
      const std::size_t out = last ? 1 : static_cast<std::size_t>(cfg.hidden_dim);
      m.weights.push_back(ad::parameter<T>(glorot_uniform<T>(in, out, gen),
                                           "decoder.w" + std::to_string(l)));
      m.biases.push_back(
          ad::parameter<T>(Mat<T>(1, out), "decoder.b" + std::to_string(l)));
      in = out;
    }
    return m;
  }

  // Elementwise product of the pair embeddings through the MLP; returns
  // logits (m x 1). Symmetric because the product commutes.
  ad::Tensor<T> decode_logits(ad::Tensor<T> h_u, ad::Tensor<T> h_v, bool train_mode,
                              ad::DropKey key) const {
    auto z = ad::mul(h_u, h_v);
    for (std::size_t l = 0; l < weights.size(); ++l) {
      z = ad::add(ad::matmul(z, weights[l]), biases[l]);
      if (l + 1 < weights.size()) {
        z = ad::relu(z);
        key.op_id = 0x100 + l;
        z = ad::dropout(z, cfg.dropout, train_mode, key);
      }
    }
    return z;
  }

  std::vector<ad::Tensor<T>> parameters() const {
    std::vector<ad::Tensor<T>> out = weights;
    out.insert(out.end(), biases.begin(), biases.end());
    return out;
  }
};

// ---- GraphSAGE ----------------------------------------------------------------

struct SageConfig {
  int in_dim = 0;
  int hidden_dim = 32;
  int out_dim = 32;
  int num_layers = 2;
  double dropout = 0.3;
  bool concat_aggregator = false;  // h = W [self || mean] instead of the sum form
  bool relu_after_final = false;
};

template <typename T>
struct SageModel {
  SageConfig cfg;
  std::vector<ad::Tensor<T>> w_self, w_neigh, w_cat, bias;

  static SageModel init(const SageConfig& cfg, uint64_t seed) {
    SageModel m;
    m.cfg = cfg;
    rng::Rng gen(rng::derive(seed, 0x73616765));
    std::size_t in = static_cast<std::size_t>(cfg.in_dim);
    for (int l = 0; l < cfg.num_layers; ++l) {
      const std::size_t out = static_cast<std::size_t>(
          l == cfg.num_layers - 1 ? cfg.out_dim : cfg.hidden_dim);
      const std::string tag = std::to_string(l);
      if (cfg.concat_aggregator) {
        m.w_cat.push_back(
            ad::parameter<T>(glorot_uniform<T>(2 * in, out, gen), "sage.wcat" + tag));
      } else {
        m.w_self.push_back(
            ad::parameter<T>(glorot_uniform<T>(in, out, gen), "sage.wself" + tag));
        m.w_neigh.push_back(
            ad::parameter<T>(glorot_uniform<T>(in, out, gen), "sage.wneigh" + tag));
      }
      m.bias.push_back(ad::parameter<T>(Mat<T>(1, out), "sage.b" + tag));
      in = out;
    }
    return m;
  }

  // Mean-aggregation forward over the block; empty neighborhoods contribute
  // a zero neighbor term. ReLU between layers, none after the final one
  // unless relu_after_final is set.
  ad::Tensor<T> forward(const Block& block, const Matf& features, bool train_mode,
                        ad::DropKey key) const {
    if (block.depth() != static_cast<std::size_t>(cfg.num_layers)) {
      throw ShapeMismatch("sage: block depth != num_layers");
    }
    auto h = ad::constant(gather_feature_rows<T>(features, block.input_nodes()));
    for (std::size_t l = 0; l < block.layers.size(); ++l) {
      const BlockLayer& layer = block.layers[l];
      auto self_rows = ad::row_gather(h, detail::iota_u32(layer.dst_nodes.size()));
      auto gathered = ad::row_gather(h, layer.edge_src);
      auto neigh = ad::segment_mean(gathered, layer.edge_dst, layer.dst_nodes.size());
      ad::Tensor<T> z;
      if (cfg.concat_aggregator) {
        z = ad::add(ad::matmul(ad::concat_cols(self_rows, neigh), w_cat[l]), bias[l]);
      } else {
        z = ad::add(ad::add(ad::matmul(self_rows, w_self[l]), ad::matmul(neigh, w_neigh[l])),
                    bias[l]);
      }
      const bool last = l + 1 == block.layers.size();
      if (!last || cfg.relu_after_final) z = ad::relu(z);
      if (!last) {
        key.op_id = 0x200 + l;
        z = ad::dropout(z, cfg.dropout, train_mode, key);
      }
      h = z;
    }
    return h;
  }

  std::vector<ad::Tensor<T>> parameters() const {
    std::vector<ad::Tensor<T>> out;
    for (const auto& w : w_self) out.push_back(w);
    for (const auto& w : w_neigh) out.push_back(w);
    for (const auto& w : w_cat) out.push_back(w);
    for (const auto& b : bias) out.push_back(b);
    return out;
  }
};

// ---- GAT ----------------------------------------------------------------------

struct GatConfig {
  int in_dim = 0;
  int hidden_dim = 256;
  int heads_l1 = 2;   // concatenated
  int heads_l2 = 1;   // averaged-free single head, no concat
  int out_dim = 512;  // must equal hidden_dim * heads_l1
  double dropout = 0.05;
  double leaky_slope = 0.2;

  void validate() const {
    if (out_dim != hidden_dim * heads_l1) {
      throw ContractError("gat: out_dim must equal hidden_dim * heads_l1");
    }
  }
};

template <typename T>
struct GatModel {
  GatConfig cfg;
  // Layer 1: heads_l1 heads of in -> hidden; layer 2: one head of
  // (hidden * heads_l1) -> out_dim.
  std::vector<ad::Tensor<T>> w1, a1_src, a1_dst;
  ad::Tensor<T> w2, a2_src, a2_dst;

  static GatModel init(const GatConfig& cfg, uint64_t seed) {
    cfg.validate();
    GatModel m;
    m.cfg = cfg;
    rng::Rng gen(rng::derive(seed, 0x676174));
    const auto in = static_cast<std::size_t>(cfg.in_dim);
    const auto hid = static_cast<std::size_t>(cfg.hidden_dim);
    for (int hd = 0; hd < cfg.heads_l1; ++hd) {
      const std::string tag = std::to_string(hd);
      m.w1.push_back(ad::parameter<T>(glorot_uniform<T>(in, hid, gen), "gat.w1." + tag));
      m.a1_src.push_back(
          ad::parameter<T>(glorot_uniform<T>(hid, 1, gen), "gat.a1src." + tag));
      m.a1_dst.push_back(
          ad::parameter<T>(glorot_uniform<T>(hid, 1, gen), "gat.a1dst." + tag));
    }
    const auto mid = static_cast<std::size_t>(cfg.hidden_dim * cfg.heads_l1);
    const auto out = static_cast<std::size_t>(cfg.out_dim);
    m.w2 = ad::parameter<T>(glorot_uniform<T>(mid, out, gen), "gat.w2");
    m.a2_src = ad::parameter<T>(glorot_uniform<T>(out, 1, gen), "gat.a2src");
    m.a2_dst = ad::parameter<T>(glorot_uniform<T>(out, 1, gen), "gat.a2dst");
    return m;
  }

  // Attention weights alpha_ij = segment_softmax over j in N(i) plus a self
  // loop, scores e_ij = leaky_relu(<a_dst, W h_i> + <a_src, W h_j>).
  static ad::Tensor<T> attention_layer(const BlockLayer& layer, ad::Tensor<T> h_src,
                                       ad::Tensor<T> w, ad::Tensor<T> a_src,
                                       ad::Tensor<T> a_dst, double slope, double dropout_p,
                                       bool train_mode, ad::DropKey key) {
    const std::size_t n_dst = layer.dst_nodes.size();
    // Self-loops: dst i is src i because dst_nodes prefix src_nodes.
    std::vector<std::pair<uint32_t, uint32_t>> edges;  // (dst_local, src_local)
    edges.reserve(layer.edge_dst.size() + n_dst);
    for (std::size_t e = 0; e < layer.edge_dst.size(); ++e) {
      edges.emplace_back(layer.edge_dst[e], layer.edge_src[e]);
    }
    for (uint32_t i = 0; i < n_dst; ++i) edges.emplace_back(i, i);
    std::stable_sort(edges.begin(), edges.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<uint32_t> e_dst(edges.size()), e_src(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      e_dst[e] = edges[e].first;
      e_src[e] = edges[e].second;
    }

    auto wh = ad::matmul(h_src, w);                 // src x d'
    auto score_src = ad::matmul(wh, a_src);         // src x 1
    auto score_dst = ad::matmul(wh, a_dst);         // src x 1 (dst rows are a prefix)
    auto e_scores = ad::leaky_relu(
        ad::add(ad::row_gather(score_dst, e_dst), ad::row_gather(score_src, e_src)), slope);
    auto alpha = ad::segment_softmax(e_scores, e_dst, n_dst);
    key.op_id ^= 0x400;
    alpha = ad::dropout(alpha, dropout_p, train_mode, key);
    auto messages = ad::scale_rows(ad::row_gather(wh, e_src), alpha);
    return ad::segment_sum(messages, e_dst, n_dst);
  }

  ad::Tensor<T> forward(const Block& block, const Matf& features, bool train_mode,
                        ad::DropKey key) const {
    if (block.depth() != 2) throw ShapeMismatch("gat: block depth must be 2");
    auto h = ad::constant(gather_feature_rows<T>(features, block.input_nodes()));

    key.op_id = 0x300;
    h = ad::dropout(h, cfg.dropout, train_mode, key);
    std::vector<ad::Tensor<T>> heads;
    for (int hd = 0; hd < cfg.heads_l1; ++hd) {
      ad::DropKey hk = key;
      hk.op_id = 0x310 + static_cast<uint64_t>(hd);
      heads.push_back(attention_layer(block.layers[0], h, w1[static_cast<std::size_t>(hd)],
                                      a1_src[static_cast<std::size_t>(hd)],
                                      a1_dst[static_cast<std::size_t>(hd)], cfg.leaky_slope,
                                      cfg.dropout, train_mode, hk));
    }
    auto h1 = ad::elu(ad::concat_cols(heads));

    ad::DropKey k2 = key;
    k2.op_id = 0x320;
    h1 = ad::dropout(h1, cfg.dropout, train_mode, k2);
    ad::DropKey k3 = key;
    k3.op_id = 0x330;
    // Final layer: single head, no concat, no activation.
    return attention_layer(block.layers[1], h1, w2, a2_src, a2_dst, cfg.leaky_slope, cfg.dropout,
                           train_mode, k3);
  }

  std::vector<ad::Tensor<T>> parameters() const {
    std::vector<ad::Tensor<T>> out;
    for (const auto& t : w1) out.push_back(t);
    for (const auto& t : a1_src) out.push_back(t);
    for (const auto& t : a1_dst) out.push_back(t);
    out.push_back(w2);
    out.push_back(a2_src);
    out.push_back(a2_dst);
    return out;
  }
};

// ---- LightGCN -------------------------------------------------------------------

struct LightGcnConfig {
  uint64_t num_nodes = 0;
  int emb_dim = 128;
  int num_layers = 2;
  enum class Combine { kMean, kSum };
  enum class Norm { kMean, kSymmetric };
  Combine combine = Combine::kMean;
  Norm norm = Norm::kSymmetric;
};

template <typename T>
struct LightGcnModel {
  LightGcnConfig cfg;
  ad::Tensor<T> embeddings;  // the only parameter

  static LightGcnModel init(const LightGcnConfig& cfg, uint64_t seed) {
    LightGcnModel m;
    m.cfg = cfg;
    rng::Rng gen(rng::derive(seed, 0x6c67636e));
    m.embeddings = ad::parameter<T>(
        normal_init<T>(cfg.num_nodes, static_cast<std::size_t>(cfg.emb_dim), 0.1, gen),
        "lightgcn.emb");
    return m;
  }

  // E^k = Norm(A) E^(k-1); final embedding combines E^0..E^K by mean or sum.
  // No nonlinearity, no feature transform.
  ad::Tensor<T> forward(const graph::Graph& g) const {
    const auto norm =
        cfg.norm == LightGcnConfig::Norm::kMean ? GcnNorm::kMean : GcnNorm::kSymmetric;
    auto e = embeddings;
    auto combined = embeddings;
    for (int k = 0; k < cfg.num_layers; ++k) {
      e = graph_propagate<T>(g, e, norm);
      combined = ad::add(combined, e);
    }
    if (cfg.combine == LightGcnConfig::Combine::kMean) {
      combined = ad::scale(combined, 1.0 / static_cast<double>(cfg.num_layers + 1));
    }
    return combined;
  }

  std::vector<ad::Tensor<T>> parameters() const { return {embeddings}; }
};

// ---- PinSAGE-style --------------------------------------------------------------

struct PinSageConfig {
  int in_dim = 0;
  int hidden_dim = 256;
  int out_dim = 128;
  int num_layers = 3;
  double dropout = 0.25;
  uint32_t neighbors_per_hop = 8;
};

template <typename T>
struct PinSageModel {
  PinSageConfig cfg;
  std::vector<ad::Tensor<T>> w_self, w_neigh, bias;

  static PinSageModel init(const PinSageConfig& cfg, uint64_t seed) {
    PinSageModel m;
    m.cfg = cfg;
    rng::Rng gen(rng::derive(seed, 0x70696e));
    std::size_t in = static_cast<std::size_t>(cfg.in_dim);
    for (int l = 0; l < cfg.num_layers; ++l) {
      const std::size_t out =
          static_cast<std::size_t>(l == 0 && cfg.num_layers > 1 ? cfg.hidden_dim : cfg.out_dim);
      const std::string tag = std::to_string(l);
      m.w_self.push_back(
          ad::parameter<T>(glorot_uniform<T>(in, out, gen), "pinsage.wself" + tag));
      m.w_neigh.push_back(
          ad::parameter<T>(glorot_uniform<T>(in, out, gen), "pinsage.wneigh" + tag));
      m.bias.push_back(ad::parameter<T>(Mat<T>(1, out), "pinsage.b" + tag));
      in = out;
    }
    return m;
  }

  // h_dst = W_self h_dst + W_neigh sum_u w_u h_u + b with the block's
  // importance weights; ReLU between layers (none after the final one),
  // dropout after layers 2..L.
  ad::Tensor<T> forward(const Block& block, const Matf& features, bool train_mode,
                        ad::DropKey key) const {
    if (block.depth() != static_cast<std::size_t>(cfg.num_layers)) {
      throw ShapeMismatch("pinsage: block depth != num_layers");
    }
    auto h = ad::constant(gather_feature_rows<T>(features, block.input_nodes()));
    for (std::size_t l = 0; l < block.layers.size(); ++l) {
      const BlockLayer& layer = block.layers[l];
      auto self_rows = ad::row_gather(h, detail::iota_u32(layer.dst_nodes.size()));
      ad::Tensor<T> neigh;
      if (layer.weighted()) {
        Mat<T> w(layer.edge_weight.size(), 1);
        for (std::size_t e = 0; e < layer.edge_weight.size(); ++e) {
          w[e] = static_cast<T>(layer.edge_weight[e]);
        }
        auto weighted = ad::scale_rows(ad::row_gather(h, layer.edge_src), ad::constant(std::move(w)));
        neigh = ad::segment_sum(weighted, layer.edge_dst, layer.dst_nodes.size());
      } else {
        neigh = ad::segment_mean(ad::row_gather(h, layer.edge_src), layer.edge_dst,
                                 layer.dst_nodes.size());
      }
      auto z = ad::add(
          ad::add(ad::matmul(self_rows, w_self[l]), ad::matmul(neigh, w_neigh[l])), bias[l]);
      if (l + 1 < block.layers.size()) z = ad::relu(z);
      if (l >= 1) {
        key.op_id = 0x500 + l;
        z = ad::dropout(z, cfg.dropout, train_mode, key);
      }
      h = z;
    }
    return h;
  }

  std::vector<ad::Tensor<T>> parameters() const {
    std::vector<ad::Tensor<T>> out;
    for (const auto& w : w_self) out.push_back(w);
    for (const auto& w : w_neigh) out.push_back(w);
    for (const auto& b : bias) out.push_back(b);
    return out;
  }
};

}  // namespace copg::models

#endif  // COPG_MODELS_HPP_
