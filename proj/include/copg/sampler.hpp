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

#ifndef COPG_SAMPLER_HPP_
#define COPG_SAMPLER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "copg/block.hpp"
#include "copg/graph.hpp"

namespace copg::sampler {

// Per-hop neighbor caps; fanout[0] applies to the seeds' direct neighbors.
using FanoutSpec = std::vector<uint32_t>;

// Uniform without-replacement neighbor sampling, one layer per fanout entry.
// Deterministic in (graph, seeds, fanout, seed); isolated seeds produce
// layers with empty edge sets.
Block sample_block(const graph::Graph& g, std::span<const uint32_t> seeds,
                   const FanoutSpec& fanout, uint64_t seed);

// Importance-weighted neighbor lists from short random walks.
struct WalkTable {
  uint32_t num_walks = 15;
  uint32_t walk_length = 5;
  uint32_t topk = 8;
  uint64_t seed = 0;
  // CSR over nodes: ids/weights in [offsets[u], offsets[u+1]).
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> ids;
  std::vector<double> weights;

  std::span<const uint32_t> neighbor_ids(uint32_t u) const {
    return {ids.data() + offsets[u], ids.data() + offsets[u + 1]};
  }
  std::span<const double> neighbor_weights(uint32_t u) const {
    return {weights.data() + offsets[u], weights.data() + offsets[u + 1]};
  }
};

// For each node: `num_walks` uniform random walks of `walk_length` steps;
// visits to non-start nodes are counted, the top-k by count kept (ties by
// ascending id) and counts normalized to weights.
WalkTable precompute_walks(const graph::Graph& g, uint32_t num_walks, uint32_t walk_length,
                           uint32_t topk, uint64_t seed);

// Layered sampling from the walk table: each dst draws up to `cap` walk
// neighbors (all of them when the entry is small, otherwise weighted
// sampling without replacement); per-dst weights renormalize to 1.
Block importance_block(const WalkTable& table, std::span<const uint32_t> seeds, uint32_t depth,
                       uint32_t cap, uint64_t seed);

struct LinkBatch {
  std::vector<graph::Edge> edges;
  std::vector<uint8_t> labels;
  Block block;  // empty when the model ignores blocks
};

using BlockBuilder = std::function<Block(std::span<const uint32_t> /*seeds*/, uint64_t /*seed*/)>;

// One epoch of link batches: positives shuffled per epoch, fresh negatives
// at `neg_ratio` drawn inside `node_set` (rejected against g_reject), the
// combined set shuffled and chunked. Each batch carries the Block over its
// endpoints when a builder is given.
std::vector<LinkBatch> link_batches(const graph::EdgeList& positives,
                                    const graph::Graph& g_reject,
                                    const std::vector<uint32_t>& node_set, std::size_t batch_size,
                                    double neg_ratio, const BlockBuilder& builder,
                                    uint64_t run_seed, uint64_t epoch);

// WLK1 binary: magic + params + per-node (u32 count, repeated u32 id + f32
// weight).
void save_walks(const std::string& path, const WalkTable& t);
WalkTable load_walks(const std::string& path);

}  // namespace copg::sampler

#endif  // COPG_SAMPLER_HPP_
