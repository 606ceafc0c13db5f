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

#include "copg/synthetic.hpp"

using namespace copg;

TEST_CASE("path(3): 3 nodes, 2 edges, the single non-edge as negative") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kPath;
  spec.n = 3;
  spec.neg_ratio = 1.0;
  auto data = synth::generate(spec);
  CHECK(data.g.num_nodes() == 3);
  CHECK(data.g.num_edges() == 2);
  REQUIRE(data.labeled.size() == 3);  // 2 positives + 1 clamped negative
  std::size_t ones = 0;
  for (uint8_t l : data.labeled.labels) ones += l;
  CHECK(ones == 2);
  bool found_non_edge = false;
  for (std::size_t i = 0; i < data.labeled.size(); ++i) {
    if (!data.labeled.labels[i]) {
      CHECK(data.labeled.edges[i] == graph::Edge{0, 2});
      found_non_edge = true;
    }
  }
  CHECK(found_non_edge);
}

TEST_CASE("erdos_renyi with p=0 has no edges") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kErdosRenyi;
  spec.n = 50;
  spec.er_p = 0.0;
  auto data = synth::generate(spec);
  CHECK(data.g.num_edges() == 0);
  CHECK(data.labeled.size() == 0);
}

TEST_CASE("star and triangle shapes") {
  synth::SyntheticSpec star;
  star.kind = synth::SyntheticSpec::Kind::kStar;
  star.n = 8;
  auto s = synth::generate(star);
  CHECK(s.g.num_edges() == 7);
  CHECK(s.g.degree(0) == 7);

  synth::SyntheticSpec tri;
  tri.kind = synth::SyntheticSpec::Kind::kTriangle;
  auto t = synth::generate(tri);
  CHECK(t.g.num_nodes() == 3);
  CHECK(t.g.num_edges() == 3);
}

TEST_CASE("planted partition is intra-cluster dominated") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kPlantedPartition;
  spec.n = 200;
  spec.clusters = 2;
  spec.p_in = 0.2;
  spec.p_out = 0.01;
  spec.seed = 33;
  auto data = synth::generate(spec);

  std::size_t intra = 0, total = 0;
  for (const auto& [u, v] : data.g.edge_list()) {
    ++total;
    if (data.cluster[u] == data.cluster[v]) ++intra;
  }
  // Expected intra ~ 2*C(100,2)*0.2 = 1980 vs inter ~ 100*100*0.01 = 100;
  // the 0.85 floor sits far outside three binomial sigmas.
  CHECK(static_cast<double>(intra) / static_cast<double>(total) >= 0.85);

  SUBCASE("invalid probabilities are rejected") {
    synth::SyntheticSpec bad = spec;
    bad.p_out = 0.5;
    bad.p_in = 0.2;
    CHECK_THROWS_AS(synth::generate(bad), ContractError);
  }
}

TEST_CASE("generation is deterministic per seed") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kPlantedPartition;
  spec.n = 60;
  spec.clusters = 3;
  spec.p_in = 0.3;
  spec.p_out = 0.02;
  spec.seed = 9;
  auto a = synth::generate(spec);
  auto b = synth::generate(spec);
  CHECK(a.g.edge_list() == b.g.edge_list());
  CHECK(a.labeled.edges == b.labeled.edges);
  REQUIRE(a.feats.data.size() == b.feats.data.size());
  for (std::size_t i = 0; i < a.feats.data.size(); ++i) {
    CHECK(a.feats.data[i] == b.feats.data[i]);
  }
  spec.seed = 10;
  auto c = synth::generate(spec);
  CHECK(a.g.edge_list() != c.g.edge_list());
}

TEST_CASE("cluster_signal features separate clusters") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kPlantedPartition;
  spec.n = 100;
  spec.clusters = 2;
  spec.p_in = 0.2;
  spec.p_out = 0.01;
  spec.feature_dim = 8;
  spec.noise = 0.3;
  auto data = synth::generate(spec);

  // Mean same-cluster distance should be well under cross-cluster distance.
  double same = 0, cross = 0;
  std::size_t same_n = 0, cross_n = 0;
  for (uint32_t a = 0; a < spec.n; a += 7) {
    for (uint32_t b = a + 1; b < spec.n; b += 5) {
      double d = 0;
      for (std::size_t c = 0; c < 8; ++c) {
        const double diff = data.feats.data(a, c) - data.feats.data(b, c);
        d += diff * diff;
      }
      if (data.cluster[a] == data.cluster[b]) {
        same += d;
        ++same_n;
      } else {
        cross += d;
        ++cross_n;
      }
    }
  }
  CHECK(same / static_cast<double>(same_n) < cross / static_cast<double>(cross_n));
}

TEST_CASE("onehot_id features are the identity") {
  synth::SyntheticSpec spec;
  spec.kind = synth::SyntheticSpec::Kind::kPath;
  spec.n = 5;
  spec.feature_mode = synth::SyntheticSpec::FeatureMode::kOneHotId;
  auto data = synth::generate(spec);
  CHECK(data.feats.data.cols() == 5);
  for (uint32_t i = 0; i < 5; ++i) {
    for (uint32_t j = 0; j < 5; ++j) {
      CHECK(data.feats.data(i, j) == (i == j ? 1.0f : 0.0f));
    }
  }
}
