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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "copg/models.hpp"
#include "copg/sampler.hpp"
#include "helpers.hpp"

using namespace copg;
using models::Block;
using models::BlockLayer;

namespace {

constexpr uint32_t kFull = 0x7fffffffu;

Block full_block(const graph::Graph& g, std::vector<uint32_t> seeds, std::size_t depth) {
  return sampler::sample_block(g, seeds, sampler::FanoutSpec(depth, kFull), 0);
}

Matf iota_features(std::size_t n, std::size_t d, float scale = 1.0f) {
  Matf f(n, d);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = scale * static_cast<float>((i % 7) + 1) / 7.0f;
  }
  return f;
}

// Straight-line attention computation over explicit adjacency (self-loops
// included), one head.
Matd gat_oracle(const std::vector<std::vector<uint32_t>>& nbrs, const Matd& h, const Matd& w,
                const Matd& a_src, const Matd& a_dst, double slope) {
  const std::size_t n = nbrs.size();
  const std::size_t dout = w.cols();
  Matd wh = testing::dense_matmul(h, w);
  Matd out(n, dout);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<uint32_t> hood = nbrs[i];
    hood.push_back(static_cast<uint32_t>(i));
    std::vector<double> scores;
    for (uint32_t j : hood) {
      double e = 0.0;
      for (std::size_t c = 0; c < dout; ++c) {
        e += a_dst(c, 0) * wh(i, c) + a_src(c, 0) * wh(j, c);
      }
      scores.push_back(e > 0.0 ? e : slope * e);
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    double alpha_total = 0.0;
    for (std::size_t k = 0; k < hood.size(); ++k) {
      const double alpha = std::exp(scores[k] - mx) / z;
      alpha_total += alpha;
      for (std::size_t c = 0; c < dout; ++c) out(i, c) += alpha * wh(hood[k], c);
    }
    REQUIRE(std::abs(alpha_total - 1.0) <= 1e-6);  // weights per dst sum to 1
  }
  return out;
}

}  // namespace

TEST_CASE("dot decoder examples and exact symmetry") {
  Matf u(1, 3), v(1, 3);
  u(0, 0) = 1.0f;
  v(0, 1) = 1.0f;
  auto prob = ad::sigmoid(models::dot_decode(ad::constant(u), ad::constant(v)));
  CHECK(prob->value[0] == doctest::Approx(0.5));  // orthogonal embeddings

  Matf unit(1, 1, 1.0f);
  auto same = ad::sigmoid(models::dot_decode(ad::constant(unit), ad::constant(unit)));
  CHECK(same->value[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-6));

  rng::Rng gen(3);
  auto a = ad::constant(testing::random_mat<float>(5, 8, gen));
  auto b = ad::constant(testing::random_mat<float>(5, 8, gen));
  auto ab = models::dot_decode(a, b);
  auto ba = models::dot_decode(b, a);
  for (std::size_t i = 0; i < ab->value.size(); ++i) {
    CHECK(ab->value[i] == ba->value[i]);  // exactly symmetric
  }
}

TEST_CASE("mlp decoder") {
  models::MlpDecoderConfig cfg;
  cfg.in_dim = 6;
  cfg.hidden_dim = 6;
  cfg.num_layers = 2;
  cfg.dropout = 0.0;
  auto dec = models::MlpDecoder<float>::init(cfg, 11);

  rng::Rng gen(5);
  auto hu = ad::constant(testing::random_mat<float>(4, 6, gen));
  auto hv = ad::constant(testing::random_mat<float>(4, 6, gen));

  SUBCASE("symmetric because the elementwise product commutes") {
    auto uv = dec.decode_logits(hu, hv, false, {});
    auto vu = dec.decode_logits(hv, hu, false, {});
    for (std::size_t i = 0; i < uv->value.size(); ++i) CHECK(uv->value[i] == vu->value[i]);
  }

  SUBCASE("zero embeddings collapse to the bias path") {
    auto zero = ad::constant(Matf(3, 6, 0.0f));
    auto logits = dec.decode_logits(zero, zero, false, {});
    CHECK(logits->value[0] == logits->value[1]);
    CHECK(logits->value[1] == logits->value[2]);
  }

  SUBCASE("matches a straight-line dense recomputation") {
    auto logits = dec.decode_logits(hu, hv, false, {});
    for (std::size_t r = 0; r < 4; ++r) {
      // z = hu .* hv, then two affine layers with relu between.
      std::vector<double> z(6);
      for (std::size_t c = 0; c < 6; ++c) {
        z[c] = static_cast<double>(hu->value(r, c)) * hv->value(r, c);
      }
      std::vector<double> h1(6, 0.0);
      for (std::size_t o = 0; o < 6; ++o) {
        double acc = dec.biases[0]->value[o];
        for (std::size_t c = 0; c < 6; ++c) acc += z[c] * dec.weights[0]->value(c, o);
        h1[o] = std::max(acc, 0.0);
      }
      double out = dec.biases[1]->value[0];
      for (std::size_t c = 0; c < 6; ++c) out += h1[c] * dec.weights[1]->value(c, 0);
      CHECK(std::abs(out - static_cast<double>(logits->value[r])) <= 1e-6);
    }
  }
}

TEST_CASE("graphsage forward") {
  SUBCASE("isolated node sees only its self path") {
    graph::Graph g(3, {{1, 2}});
    models::SageConfig cfg;
    cfg.in_dim = 4;
    cfg.hidden_dim = 5;
    cfg.out_dim = 5;
    cfg.num_layers = 1;
    cfg.dropout = 0.0;
    auto m = models::SageModel<float>::init(cfg, 3);
    auto feats = iota_features(3, 4);
    auto block = full_block(g, {0}, 1);
    auto h = m.forward(block, feats, false, {});
    // Oracle: W_self x + b with a zero neighbor term, no activation on the
    // final (only) layer.
    for (std::size_t o = 0; o < 5; ++o) {
      double acc = m.bias[0]->value[o];
      for (std::size_t c = 0; c < 4; ++c) acc += feats(0, c) * m.w_self[0]->value(c, o);
      CHECK(std::abs(acc - h->value(0, o)) <= 1e-6);
    }
  }

  SUBCASE("star center's neighbor mean of identical leaves is the leaf") {
    graph::EdgeList el;
    for (uint32_t i = 1; i <= 6; ++i) el.edges.emplace_back(0, i);
    graph::Graph g(7, el.edges);
    Matf feats(7, 3);
    for (uint32_t i = 1; i <= 6; ++i) {
      for (std::size_t c = 0; c < 3; ++c) feats(i, c) = 0.5f;
    }
    models::SageConfig cfg;
    cfg.in_dim = 3;
    cfg.out_dim = 4;
    cfg.num_layers = 1;
    auto m = models::SageModel<float>::init(cfg, 5);
    auto h = m.forward(full_block(g, {0}, 1), feats, false, {});
    // Center output = W_self*0 + W_neigh*leaf + b.
    for (std::size_t o = 0; o < 4; ++o) {
      double acc = m.bias[0]->value[o];
      for (std::size_t c = 0; c < 3; ++c) acc += 0.5 * m.w_neigh[0]->value(c, o);
      CHECK(std::abs(acc - h->value(0, o)) <= 1e-6);
    }
  }

  SUBCASE("one layer with identity-like weights equals the dense mean oracle") {
    graph::Graph g(4, {{0, 1}, {1, 2}, {2, 3}});
    models::SageConfig cfg;
    cfg.in_dim = 4;
    cfg.out_dim = 4;
    cfg.num_layers = 1;
    auto m = models::SageModel<float>::init(cfg, 7);
    // W_self = 0, W_neigh = I, b = 0: output is exactly D^-1 A X.
    m.w_self[0]->value.fill(0.0f);
    m.w_neigh[0]->value.fill(0.0f);
    for (int i = 0; i < 4; ++i) m.w_neigh[0]->value(i, i) = 1.0f;
    m.bias[0]->value.fill(0.0f);

    rng::Rng gen(9);
    auto feats = testing::random_mat<float>(4, 4, gen);
    auto h = m.forward(full_block(g, {0, 1, 2, 3}, 1), feats, false, {});
    auto oracle =
        testing::dense_matmul(testing::dense_norm_adjacency(g, false), feats.cast<double>());
    for (std::size_t i = 0; i < h->value.size(); ++i) {
      CHECK(std::abs(h->value[i] - oracle[i]) <= 1e-6);
    }
  }
}

TEST_CASE("gat attention layer") {
  SUBCASE("one neighbor plus self-loop with identical features gives 0.5/0.5") {
    graph::Graph g(2, {{0, 1}});
    Matf feats(2, 3, 0.7f);  // identical rows
    models::GatConfig cfg;
    cfg.in_dim = 3;
    cfg.hidden_dim = 4;
    cfg.heads_l1 = 2;
    cfg.out_dim = 8;
    cfg.dropout = 0.0;
    auto m = models::GatModel<float>::init(cfg, 3);
    auto block = full_block(g, {0, 1}, 1);
    auto out = models::GatModel<float>::attention_layer(
        block.layers[0], ad::constant(models::gather_feature_rows<float>(feats, block.input_nodes())),
        m.w1[0], m.a1_src[0], m.a1_dst[0], 0.2, 0.0, false, {});
    // All Wh rows identical, so any convex combination equals Wh itself;
    // matching it confirms the attention weights sum to one.
    Matd wh = testing::dense_matmul(feats.cast<double>(), m.w1[0]->value.cast<double>());
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(std::abs(out->value(0, c) - wh(0, c)) <= 1e-6);
      CHECK(std::abs(out->value(1, c) - wh(1, c)) <= 1e-6);
    }
  }

  SUBCASE("triangle matches the brute-force oracle and rows sum to one") {
    graph::Graph g(3, {{0, 1}, {0, 2}, {1, 2}});
    rng::Rng gen(17);
    auto feats = testing::random_mat<float>(3, 3, gen);
    models::GatConfig cfg;
    cfg.in_dim = 3;
    cfg.hidden_dim = 4;
    cfg.heads_l1 = 1;
    cfg.out_dim = 4;
    cfg.dropout = 0.0;
    auto m = models::GatModel<float>::init(cfg, 23);
    auto block = full_block(g, {0, 1, 2}, 1);
    auto out = models::GatModel<float>::attention_layer(
        block.layers[0], ad::constant(models::gather_feature_rows<float>(feats, block.input_nodes())),
        m.w1[0], m.a1_src[0], m.a1_dst[0], 0.2, 0.0, false, {});

    std::vector<std::vector<uint32_t>> nbrs{{1, 2}, {0, 2}, {0, 1}};
    auto oracle = gat_oracle(nbrs, feats.cast<double>(), m.w1[0]->value.cast<double>(),
                             m.a1_src[0]->value.cast<double>(),
                             m.a1_dst[0]->value.cast<double>(), 0.2);
    for (std::size_t i = 0; i < out->value.size(); ++i) {
      CHECK(std::abs(out->value[i] - oracle[i]) <= 1e-6);
    }
  }

  SUBCASE("full two-layer forward has the configured output width") {
    auto g = testing::random_graph(12, 0.3, 3);
    auto feats = iota_features(12, 5);
    models::GatConfig cfg;
    cfg.in_dim = 5;
    cfg.hidden_dim = 6;
    cfg.heads_l1 = 2;
    cfg.out_dim = 12;
    auto m = models::GatModel<float>::init(cfg, 1);
    auto h = m.forward(full_block(g, {0, 5, 7}, 2), feats, false, {});
    CHECK(h->value.rows() == 3);
    CHECK(h->value.cols() == 12);

    models::GatConfig bad = cfg;
    bad.out_dim = 10;
    CHECK_THROWS_AS(models::GatModel<float>::init(bad, 1), ContractError);
  }
}

TEST_CASE("lightgcn propagation") {
  SUBCASE("zero layers returns the embedding table") {
    graph::Graph g(4, {{0, 1}});
    models::LightGcnConfig cfg;
    cfg.num_nodes = 4;
    cfg.emb_dim = 3;
    cfg.num_layers = 0;
    auto m = models::LightGcnModel<float>::init(cfg, 5);
    auto h = m.forward(g);
    for (std::size_t i = 0; i < h->value.size(); ++i) {
      CHECK(h->value[i] == m.embeddings->value[i]);
    }
  }

  SUBCASE("path graph, one mean layer, identity embeddings -> D^-1 A") {
    graph::Graph g(3, {{0, 1}, {1, 2}});
    models::LightGcnConfig cfg;
    cfg.num_nodes = 3;
    cfg.emb_dim = 3;
    cfg.num_layers = 1;
    cfg.combine = models::LightGcnConfig::Combine::kSum;  // E0 + E1
    cfg.norm = models::LightGcnConfig::Norm::kMean;
    auto m = models::LightGcnModel<float>::init(cfg, 5);
    m.embeddings->value.fill(0.0f);
    for (int i = 0; i < 3; ++i) m.embeddings->value(i, i) = 1.0f;
    auto h = m.forward(g);
    auto dense = testing::dense_norm_adjacency(g, false);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double want = dense(i, j) + (i == j ? 1.0 : 0.0);
        CHECK(std::abs(h->value(i, j) - want) <= 1e-6);
      }
    }
  }

  SUBCASE("K in {1,2,3} equals the dense power oracle on random graphs") {
    for (int trial = 0; trial < 20; ++trial) {
      rng::Rng tg(100 + trial);
      const auto n = static_cast<uint32_t>(4 + tg.bounded(9));  // <= 12 nodes
      auto g = testing::random_graph(n, 0.4, 500 + trial);
      for (int layers : {1, 2, 3}) {
        for (auto norm : {models::LightGcnConfig::Norm::kMean,
                          models::LightGcnConfig::Norm::kSymmetric}) {
          models::LightGcnConfig cfg;
          cfg.num_nodes = n;
          cfg.emb_dim = 4;
          cfg.num_layers = layers;
          cfg.norm = norm;
          cfg.combine = models::LightGcnConfig::Combine::kMean;
          auto m = models::LightGcnModel<float>::init(cfg, 7 + trial);
          auto h = m.forward(g);

          auto a = testing::dense_norm_adjacency(
              g, norm == models::LightGcnConfig::Norm::kSymmetric);
          auto e = m.embeddings->value.cast<double>();
          Matd combined = e;
          Matd cur = e;
          for (int k = 0; k < layers; ++k) {
            cur = testing::dense_matmul(a, cur);
            for (std::size_t i = 0; i < combined.size(); ++i) combined[i] += cur[i];
          }
          for (std::size_t i = 0; i < combined.size(); ++i) {
            combined[i] /= static_cast<double>(layers + 1);
            CHECK(std::abs(h->value[i] - combined[i]) <= 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("pinsage forward") {
  SUBCASE("uniform weights reduce to graphsage mean aggregation") {
    auto g = testing::random_graph(9, 0.5, 9);
    auto feats = iota_features(9, 4);

    models::PinSageConfig pc;
    pc.in_dim = 4;
    pc.hidden_dim = 6;
    pc.out_dim = 5;
    pc.num_layers = 2;
    pc.dropout = 0.0;
    auto pin = models::PinSageModel<float>::init(pc, 31);

    models::SageConfig sc;
    sc.in_dim = 4;
    sc.hidden_dim = 6;
    sc.out_dim = 5;
    sc.num_layers = 2;
    sc.dropout = 0.0;
    auto sage = models::SageModel<float>::init(sc, 99);
    for (int l = 0; l < 2; ++l) {  // shared parameters
      sage.w_self[l]->value = pin.w_self[l]->value;
      sage.w_neigh[l]->value = pin.w_neigh[l]->value;
      sage.bias[l]->value = pin.bias[l]->value;
    }

    auto block = full_block(g, {0, 3, 5}, 2);
    Block weighted = block;
    for (auto& layer : weighted.layers) {
      // Attach uniform weights 1/deg per dst.
      std::vector<std::size_t> count(layer.dst_nodes.size(), 0);
      for (uint32_t d : layer.edge_dst) ++count[d];
      layer.edge_weight.resize(layer.edge_dst.size());
      for (std::size_t e = 0; e < layer.edge_dst.size(); ++e) {
        layer.edge_weight[e] = 1.0 / static_cast<double>(count[layer.edge_dst[e]]);
      }
    }

    auto hp = pin.forward(weighted, feats, false, {});
    auto hs = sage.forward(block, feats, false, {});
    REQUIRE(hp->value.size() == hs->value.size());
    for (std::size_t i = 0; i < hp->value.size(); ++i) {
      CHECK(std::abs(hp->value[i] - hs->value[i]) <= 1e-6);
    }
  }

  SUBCASE("a single neighbor with weight one is that neighbor's transform") {
    graph::Graph g(2, {{0, 1}});
    Matf feats = iota_features(2, 3);
    models::PinSageConfig pc;
    pc.in_dim = 3;
    pc.hidden_dim = 4;
    pc.out_dim = 4;
    pc.num_layers = 1;
    auto pin = models::PinSageModel<float>::init(pc, 3);
    auto block = full_block(g, {0}, 1);
    Block weighted = block;
    weighted.layers[0].edge_weight.assign(weighted.layers[0].edge_dst.size(), 1.0);
    auto h = pin.forward(weighted, feats, false, {});
    for (std::size_t o = 0; o < 4; ++o) {
      double acc = pin.bias[0]->value[o];
      for (std::size_t c = 0; c < 3; ++c) {
        acc += feats(0, c) * pin.w_self[0]->value(c, o) +
               feats(1, c) * pin.w_neigh[0]->value(c, o);
      }
      CHECK(std::abs(acc - h->value(0, o)) <= 1e-6);
    }
  }

  SUBCASE("hand weights 0.7/0.3 match a dense weighted-sum oracle") {
    graph::Graph g(3, {{0, 1}, {0, 2}});
    rng::Rng gen(7);
    auto feats = testing::random_mat<float>(3, 3, gen);
    models::PinSageConfig pc;
    pc.in_dim = 3;
    pc.hidden_dim = 4;
    pc.out_dim = 4;
    pc.num_layers = 1;
    auto pin = models::PinSageModel<float>::init(pc, 13);

    Block block;
    BlockLayer layer;
    layer.src_nodes = {0, 1, 2};
    layer.dst_nodes = {0};
    layer.edge_src = {1, 2};
    layer.edge_dst = {0, 0};
    layer.edge_weight = {0.7, 0.3};
    block.layers.push_back(layer);

    auto h = pin.forward(block, feats, false, {});
    for (std::size_t o = 0; o < 4; ++o) {
      double acc = pin.bias[0]->value[o];
      for (std::size_t c = 0; c < 3; ++c) {
        const double agg = 0.7 * feats(1, c) + 0.3 * feats(2, c);
        acc += feats(0, c) * pin.w_self[0]->value(c, o) + agg * pin.w_neigh[0]->value(c, o);
      }
      CHECK(std::abs(acc - h->value(0, o)) <= 1e-6);
    }
  }
}

TEST_CASE("parameter initialization") {
  models::SageConfig cfg;
  cfg.in_dim = 8;
  cfg.hidden_dim = 16;
  cfg.out_dim = 4;
  cfg.num_layers = 2;

  auto a = models::SageModel<float>::init(cfg, 42);
  auto b = models::SageModel<float>::init(cfg, 42);
  auto c = models::SageModel<float>::init(cfg, 43);

  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.w_self[0]->value.size(); ++i) {
    identical &= a.w_self[0]->value[i] == b.w_self[0]->value[i];
    differs |= a.w_self[0]->value[i] != c.w_self[0]->value[i];
  }
  CHECK(identical);
  CHECK(differs);

  const double bound = std::sqrt(6.0 / (8.0 + 16.0));
  for (std::size_t i = 0; i < a.w_self[0]->value.size(); ++i) {
    CHECK(std::abs(a.w_self[0]->value[i]) <= bound);
  }
  for (std::size_t i = 0; i < a.bias[0]->value.size(); ++i) {
    CHECK(a.bias[0]->value[i] == 0.0f);
  }

  models::LightGcnConfig lc;
  lc.num_nodes = 50;
  lc.emb_dim = 8;
  auto lg = models::LightGcnModel<float>::init(lc, 7);
  double mean = 0, sq = 0;
  for (std::size_t i = 0; i < lg.embeddings->value.size(); ++i) {
    mean += lg.embeddings->value[i];
  }
  mean /= static_cast<double>(lg.embeddings->value.size());
  for (std::size_t i = 0; i < lg.embeddings->value.size(); ++i) {
    const double d = lg.embeddings->value[i] - mean;
    sq += d * d;
  }
  CHECK(std::abs(std::sqrt(sq / lg.embeddings->value.size()) - 0.1) <= 0.02);
}

TEST_CASE("model forwards are permutation-equivariant") {
  // Fixed 5-node graph, all 120 relabelings, full-neighborhood blocks.
  const std::vector<graph::Edge> base_edges{{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}};
  rng::Rng gen(5);
  Matf feats = testing::random_mat<float>(5, 3, gen);

  models::SageConfig cfg;
  cfg.in_dim = 3;
  cfg.hidden_dim = 4;
  cfg.out_dim = 4;
  cfg.num_layers = 2;
  auto model = models::SageModel<float>::init(cfg, 77);

  graph::Graph g(5, base_edges);
  std::vector<uint32_t> all{0, 1, 2, 3, 4};
  auto h_base = model.forward(full_block(g, all, 2), feats, false, {});

  std::vector<uint32_t> perm{0, 1, 2, 3, 4};
  do {
    std::vector<graph::Edge> relabeled;
    for (auto [u, v] : base_edges) {
      auto a = perm[u], b = perm[v];
      if (a > b) std::swap(a, b);
      relabeled.emplace_back(a, b);
    }
    graph::Graph gp(5, relabeled);
    Matf fp(5, 3);
    for (uint32_t i = 0; i < 5; ++i) {
      for (std::size_t c = 0; c < 3; ++c) fp(perm[i], c) = feats(i, c);
    }
    auto h_perm = model.forward(full_block(gp, all, 2), feats, false, {});
    // Output row of permuted node perm[i] equals base row of node i.
    for (uint32_t i = 0; i < 5; ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        (void)fp;
        // h_perm rows are ordered by node id; map through the permutation.
      }
    }
    auto h_perm2 = model.forward(full_block(gp, all, 2), fp, false, {});
    for (uint32_t i = 0; i < 5; ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(h_perm2->value(perm[i], c) - h_base->value(i, c)) <= 1e-5);
      }
    }
    (void)h_perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE_TEMPLATE("model forward + loss pass the finite-difference oracle", T, float, double) {
  const double tolerance = std::is_same_v<T, float> ? 1e-3 : 1e-6;
  const int trials = 10;  // the acceptance suite runs the full 50
  double worst = 0.0;
  SUBCASE("graphsage") { worst = testing::fd_check_sage<T>(trials); }
  SUBCASE("gat") { worst = testing::fd_check_gat<T>(trials); }
  SUBCASE("lightgcn") { worst = testing::fd_check_lightgcn<T>(trials); }
  SUBCASE("pinsage") { worst = testing::fd_check_pinsage<T>(trials); }
  CHECK(worst <= tolerance);
}
