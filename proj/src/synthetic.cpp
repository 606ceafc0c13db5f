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

#include "copg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "copg/errors.hpp"
#include "copg/rng.hpp"

namespace copg::synth {

namespace {

std::vector<graph::Edge> planted_partition_edges(const SyntheticSpec& spec,
                                                 const std::vector<uint32_t>& cluster,
                                                 rng::Rng& gen) {
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0)) {
    throw ContractError("planted partition requires 0 <= p_out < p_in <= 1");
  }
  std::vector<graph::Edge> edges;
  for (uint32_t u = 0; u < spec.n; ++u) {
    for (uint32_t v = u + 1; v < spec.n; ++v) {
      const double p = cluster[u] == cluster[v] ? spec.p_in : spec.p_out;
      if (gen.uniform01() < p) edges.emplace_back(u, v);
    }
  }
  return edges;
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  SyntheticData out;
  rng::Rng gen(rng::derive(spec.seed, 0x73796e));

  uint32_t n = spec.n;
  out.cluster.assign(n, 0);
  std::vector<graph::Edge> edges;
  switch (spec.kind) {
    case SyntheticSpec::Kind::kPlantedPartition: {
      if (spec.clusters < 1) throw ContractError("clusters must be >= 1");
      for (uint32_t i = 0; i < n; ++i) out.cluster[i] = i % spec.clusters;
      edges = planted_partition_edges(spec, out.cluster, gen);
      break;
    }
    case SyntheticSpec::Kind::kPath:
      for (uint32_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case SyntheticSpec::Kind::kStar:
      for (uint32_t i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case SyntheticSpec::Kind::kTriangle:
      n = 3;
      out.cluster.assign(3, 0);
      edges = {{0, 1}, {0, 2}, {1, 2}};
      break;
    case SyntheticSpec::Kind::kErdosRenyi:
      for (uint32_t u = 0; u < n; ++u) {
        for (uint32_t v = u + 1; v < n; ++v) {
          if (gen.uniform01() < spec.er_p) edges.emplace_back(u, v);
        }
      }
      break;
  }

  graph::EdgeList el;
  el.edges = std::move(edges);
  el.canonicalize();
  out.g = graph::Graph(n, el.edges);

  // Features.
  const std::size_t dim = spec.feature_mode == SyntheticSpec::FeatureMode::kOneHotId
                              ? n
                              : spec.feature_dim;
  out.feats.data = Matf(n, dim);
  out.feats.bounds = {0, 0, 0, 0, dim};
  switch (spec.feature_mode) {
    case SyntheticSpec::FeatureMode::kClusterSignal: {
      const uint32_t num_clusters = std::max<uint32_t>(spec.clusters, 1);
      Matf centroids(num_clusters, dim);
      rng::Rng cgen(rng::derive(spec.seed, 0x63656e74));
      for (std::size_t i = 0; i < centroids.size(); ++i) {
        centroids[i] = static_cast<float>(cgen.normal());
      }
      for (uint32_t i = 0; i < n; ++i) {
        rng::Rng ngen(rng::derive(spec.seed, 0x6e6f6973, i));
        const float* c = centroids.row(out.cluster[i] % num_clusters);
        for (std::size_t d = 0; d < dim; ++d) {
          out.feats.data(i, d) = c[d] + static_cast<float>(ngen.normal() * spec.noise);
        }
      }
      break;
    }
    case SyntheticSpec::FeatureMode::kRandom: {
      rng::Rng fgen(rng::derive(spec.seed, 0x66656174));
      for (std::size_t i = 0; i < out.feats.data.size(); ++i) {
        out.feats.data[i] = static_cast<float>(fgen.normal());
      }
      break;
    }
    case SyntheticSpec::FeatureMode::kOneHotId:
      for (uint32_t i = 0; i < n; ++i) out.feats.data(i, i) = 1.0f;
      break;
  }

  // Labeled set: every positive, plus negatives clamped to the complement.
  const std::size_t pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  const std::size_t complement = pairs - el.edges.size();
  std::size_t want = static_cast<std::size_t>(
      std::ceil(spec.neg_ratio * static_cast<double>(el.edges.size())));
  want = std::min(want, complement);
  graph::EdgeList neg;
  if (want > 0) {
    neg = graph::sample_negative_count(out.g, want, rng::derive(spec.seed, 0x6e6567), nullptr);
  }
  out.labeled = graph::make_labeled(el, neg);
  return out;
}

}  // namespace copg::synth
