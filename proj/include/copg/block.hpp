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

#ifndef COPG_BLOCK_HPP_
#define COPG_BLOCK_HPP_

#include <cstdint>
#include <vector>

namespace copg::sampler {

// One bipartite message-passing layer: edges map src-local indices to
// dst-local indices. dst_nodes is always a prefix of src_nodes, so a node's
// own features travel with the layer.
struct BlockLayer {
  std::vector<uint32_t> src_nodes;   // global ids; dst_nodes ++ extra frontier
  std::vector<uint32_t> dst_nodes;   // global ids
  std::vector<uint32_t> edge_src;    // local index into src_nodes
  std::vector<uint32_t> edge_dst;    // local index into dst_nodes, sorted non-decreasing
  std::vector<double> edge_weight;   // optional; >= 0, sums to 1 per dst

  bool weighted() const { return !edge_weight.empty(); }
};

// Layers are ordered outermost-first: layers[0] consumes raw input features
// over the widest node set, layers.back() produces embeddings for the seeds.
// layers[k].dst_nodes == layers[k+1].src_nodes.
struct Block {
  std::vector<BlockLayer> layers;

  const std::vector<uint32_t>& input_nodes() const { return layers.front().src_nodes; }
  const std::vector<uint32_t>& output_nodes() const { return layers.back().dst_nodes; }
  std::size_t depth() const { return layers.size(); }
};

}  // namespace copg::sampler

#endif  // COPG_BLOCK_HPP_
