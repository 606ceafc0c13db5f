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

#ifndef COPG_GRAPH_HPP_
#define COPG_GRAPH_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace copg::ingest {
struct MergedTable;
}

namespace copg::graph {

using NodeId = uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // canonical u < v

// Immutable undirected graph in compressed sparse (CSR) form. Neighbor lists
// are sorted ascending; symmetric, no self-loops, no duplicates.
class Graph {
 public:
  Graph() = default;
  Graph(uint64_t num_nodes, const std::vector<Edge>& canonical_edges);

  uint64_t num_nodes() const { return num_nodes_; }
  uint64_t num_edges() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
  }
  uint64_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<uint64_t>& offsets() const { return offsets_; }
  const std::vector<NodeId>& neighbor_ids() const { return neighbors_; }

  // Canonical (u < v) edge list, sorted.
  std::vector<Edge> edge_list() const;

  // The asin <-> dense id mapping; empty for synthetic graphs.
  std::vector<std::string> asins;
  std::unordered_map<std::string, NodeId> node_index;

 private:
  uint64_t num_nodes_ = 0;
  std::vector<uint64_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

// Canonical edge list: u < v per pair, sorted lexicographically, no dups.
struct EdgeList {
  std::vector<Edge> edges;

  std::size_t size() const { return edges.size(); }
  void canonicalize();  // sort + dedup, normalizing (u, v) order
};

struct LabeledEdgeSet {
  std::vector<Edge> edges;
  std::vector<uint8_t> labels;  // 1 positive, 0 negative

  std::size_t size() const { return edges.size(); }
};

struct NodeSplit {
  std::vector<NodeId> train_nodes;  // sorted
  std::vector<NodeId> test_nodes;   // sorted
  double ratio = 0.8;
  uint64_t seed = 0;
};

// Role of each node after carving validation out of the train side.
enum class Role : uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

struct TriSplit {
  std::vector<uint8_t> role;  // per node id, values from Role
  uint64_t seed = 0;
  double ratio = 0.8;
  double val_fraction = 0.1;

  std::vector<NodeId> nodes_with(Role r) const;
};

std::pair<Graph, EdgeList> build_positive_edges(const ingest::MergedTable& merged);

// Draws ceil(ratio * |positives within restrict|) distinct non-edges with
// both endpoints in `restrict_to` (all nodes when empty). Rejection
// sampling, deterministic per seed.
EdgeList sample_negative_edges(const Graph& g, double ratio, uint64_t seed,
                               const std::vector<NodeId>* restrict_to = nullptr);

// Same complement-sampling core with an explicit count.
EdgeList sample_negative_count(const Graph& g, std::size_t count, uint64_t seed,
                               const std::vector<NodeId>* restrict_to = nullptr);

LabeledEdgeSet make_labeled(const EdgeList& pos, const EdgeList& neg);

NodeSplit inductive_node_split(const Graph& g, double ratio, uint64_t seed);

// Carves a validation subset out of the train side of `split` (second node
// split; test untouched).
TriSplit carve_validation(const Graph& g, const NodeSplit& split, double val_fraction,
                          uint64_t seed);

struct FilterResult {
  LabeledEdgeSet train;
  LabeledEdgeSet test;
  uint64_t dropped = 0;
};

FilterResult filter_edges_by_split(const LabeledEdgeSet& edges, const NodeSplit& split);

// Edges with both endpoints in `role`; cross edges dropped.
EdgeList edges_within(const Graph& g, const TriSplit& split, Role role);

// Subgraph keeping only edges whose endpoints both satisfy keep[]; node id
// space unchanged (excluded nodes become isolated).
Graph induced_subgraph(const Graph& g, const std::vector<uint8_t>& keep);

// Graph containing exactly the given edges over the same node id space.
Graph subgraph_from_edges(uint64_t num_nodes, const EdgeList& edges);

// COPG1 binary: magic + u64 node count + u64 edge count + u32 LE pairs.
void save_copg(const std::string& path, const Graph& g);
Graph load_copg(const std::string& path);

// Plain TSV "u\tv\tlabel".
void save_labeled_tsv(const std::string& path, const LabeledEdgeSet& set);
LabeledEdgeSet load_labeled_tsv(const std::string& path);

// Node -> asin sidecar ("id\tasin"), written next to the COPG1 file when the
// graph has string keys.
void save_node_map_tsv(const std::string& path, const Graph& g);
void load_node_map_tsv(const std::string& path, Graph& g);

}  // namespace copg::graph

#endif  // COPG_GRAPH_HPP_
