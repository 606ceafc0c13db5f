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

#include "copg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "copg/binio.hpp"
#include "copg/errors.hpp"
#include "copg/ingest.hpp"
#include "copg/rng.hpp"
#include "copg/version.hpp"

namespace copg::graph {

namespace {

inline uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<uint64_t>(u) << 32) | v;
}

}  // namespace

Graph::Graph(uint64_t num_nodes, const std::vector<Edge>& canonical_edges)
    : num_nodes_(num_nodes) {
  std::vector<uint64_t> deg(num_nodes, 0);
  for (const auto& [u, v] : canonical_edges) {
    if (u >= num_nodes || v >= num_nodes) throw ContractError("edge endpoint out of range");
    if (u == v) throw ContractError("self-loop in canonical edge list");
    ++deg[u];
    ++deg[v];
  }
  offsets_.assign(num_nodes + 1, 0);
  for (uint64_t i = 0; i < num_nodes; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  neighbors_.resize(offsets_[num_nodes]);
  std::vector<uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [u, v] : canonical_edges) {
    neighbors_[cursor[u]++] = v;
    neighbors_[cursor[v]++] = u;
  }
  for (uint64_t i = 0; i < num_nodes; ++i) {
    std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    for (uint64_t e = offsets_[i] + 1; e < offsets_[i + 1]; ++e) {
      if (neighbors_[e] == neighbors_[e - 1]) {
        throw ContractError("duplicate edge in canonical edge list");
      }
    }
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes_ || v >= num_nodes_) return false;
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

void EdgeList::canonicalize() {
  for (auto& [u, v] : edges) {
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::vector<NodeId> TriSplit::nodes_with(Role r) const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < role.size(); ++i) {
    if (role[i] == static_cast<uint8_t>(r)) out.push_back(i);
  }
  return out;
}

std::pair<Graph, EdgeList> build_positive_edges(const ingest::MergedTable& merged) {
  std::unordered_map<std::string, NodeId> index;
  index.reserve(merged.size());
  for (NodeId i = 0; i < merged.size(); ++i) index.emplace(merged.asins[i], i);

  EdgeList el;
  for (NodeId i = 0; i < merged.size(); ++i) {
    for (const auto& sim : merged.rows[i].similar) {
      auto it = index.find(sim);
      if (it == index.end()) {
        throw DanglingReference("similar asin '" + sim + "' of '" + merged.asins[i] +
                                "' not in merged table");
      }
      if (it->second == i) continue;  // self-reference carries no edge
      el.edges.emplace_back(i, it->second);
    }
  }
  el.canonicalize();
  Graph g(merged.size(), el.edges);
  g.asins = merged.asins;
  g.node_index = std::move(index);
  return {std::move(g), std::move(el)};
}

namespace {

// Counts canonical edges whose endpoints are both in the sorted restrict set
// (or all edges when restrict is null).
std::size_t positives_within(const Graph& g, const std::vector<NodeId>* restrict_to) {
  if (!restrict_to) return g.num_edges();
  std::vector<uint8_t> in(g.num_nodes(), 0);
  for (NodeId u : *restrict_to) in[u] = 1;
  std::size_t count = 0;
  for (NodeId u : *restrict_to) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v && in[v]) ++count;
    }
  }
  return count;
}

}  // namespace

EdgeList sample_negative_count(const Graph& g, std::size_t count, uint64_t seed,
                               const std::vector<NodeId>* restrict_to) {
  std::vector<NodeId> universe;
  if (restrict_to) {
    universe = *restrict_to;
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  } else {
    universe.resize(g.num_nodes());
    for (NodeId i = 0; i < g.num_nodes(); ++i) universe[i] = i;
  }
  const std::size_t r = universe.size();
  if (r < 2) throw ContractError("negative sampling needs >= 2 nodes in the restrict set");

  const std::size_t pos_within = positives_within(g, restrict_to ? &universe : nullptr);
  const std::size_t pairs = r * (r - 1) / 2;
  if (pairs - pos_within < count) {
    throw ExhaustedComplement("requested " + std::to_string(count) + " non-edges but only " +
                              std::to_string(pairs - pos_within) + " exist in the restrict set");
  }

  rng::Rng rng(rng::derive(seed, 0x6e656761));
  std::unordered_set<uint64_t> seen;
  seen.reserve(count * 2);
  EdgeList out;
  out.edges.reserve(count);
  while (out.edges.size() < count) {
    NodeId u = universe[rng.bounded(r)];
    NodeId v = universe[rng.bounded(r)];
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (g.has_edge(u, v)) continue;
    if (!seen.insert(pair_key(u, v)).second) continue;
    out.edges.emplace_back(u, v);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

EdgeList sample_negative_edges(const Graph& g, double ratio, uint64_t seed,
                               const std::vector<NodeId>* restrict_to) {
  if (ratio <= 0.0) throw ContractError("negative sampling ratio must be > 0");
  std::vector<NodeId> universe;
  const std::vector<NodeId>* uni = restrict_to;
  if (restrict_to) {
    universe = *restrict_to;
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    uni = &universe;
  }
  const std::size_t pos = positives_within(g, uni);
  const std::size_t count = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(pos)));
  return sample_negative_count(g, count, seed, uni);
}

LabeledEdgeSet make_labeled(const EdgeList& pos, const EdgeList& neg) {
  std::unordered_set<uint64_t> pos_keys;
  pos_keys.reserve(pos.edges.size());
  for (const auto& [u, v] : pos.edges) pos_keys.insert(pair_key(u, v));
  for (const auto& [u, v] : neg.edges) {
    if (pos_keys.count(pair_key(u, v))) {
      throw OverlapError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                         ") appears as both positive and negative");
    }
  }
  LabeledEdgeSet out;
  out.edges.reserve(pos.size() + neg.size());
  out.labels.reserve(pos.size() + neg.size());
  for (const auto& e : pos.edges) {
    out.edges.push_back(e);
    out.labels.push_back(1);
  }
  for (const auto& e : neg.edges) {
    out.edges.push_back(e);
    out.labels.push_back(0);
  }
  return out;
}

NodeSplit inductive_node_split(const Graph& g, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("split ratio must be in (0,1)");
  const uint64_t n = g.num_nodes();
  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  rng::Rng rng(rng::derive(seed, 0x73706c69));
  rng.shuffle(perm);
  const auto train_count =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  NodeSplit out;
  out.ratio = ratio;
  out.seed = seed;
  out.train_nodes.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_count));
  out.test_nodes.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_count), perm.end());
  std::sort(out.train_nodes.begin(), out.train_nodes.end());
  std::sort(out.test_nodes.begin(), out.test_nodes.end());
  return out;
}

TriSplit carve_validation(const Graph& g, const NodeSplit& split, double val_fraction,
                          uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ContractError("validation fraction must be in [0,1)");
  }
  TriSplit out;
  out.role.assign(g.num_nodes(), static_cast<uint8_t>(Role::kTrain));
  out.seed = seed;
  out.ratio = split.ratio;
  out.val_fraction = val_fraction;
  for (NodeId u : split.test_nodes) out.role[u] = static_cast<uint8_t>(Role::kTest);

  std::vector<NodeId> train = split.train_nodes;
  rng::Rng rng(rng::derive(seed, 0x76616c63));
  rng.shuffle(train);
  const auto val_count = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(train.size())));
  for (std::size_t i = 0; i < val_count; ++i) {
    out.role[train[i]] = static_cast<uint8_t>(Role::kVal);
  }
  return out;
}

FilterResult filter_edges_by_split(const LabeledEdgeSet& edges, const NodeSplit& split) {
  NodeId max_node = 0;
  for (const auto& [u, v] : edges.edges) max_node = std::max({max_node, u, v});
  std::vector<uint8_t> side(static_cast<std::size_t>(max_node) + 1, 255);
  for (NodeId u : split.train_nodes) {
    if (u < side.size()) side[u] = 0;
  }
  for (NodeId u : split.test_nodes) {
    if (u < side.size()) side[u] = 1;
  }
  FilterResult out;
  for (std::size_t i = 0; i < edges.edges.size(); ++i) {
    const auto& [u, v] = edges.edges[i];
    if (side[u] == 0 && side[v] == 0) {
      out.train.edges.push_back(edges.edges[i]);
      out.train.labels.push_back(edges.labels[i]);
    } else if (side[u] == 1 && side[v] == 1) {
      out.test.edges.push_back(edges.edges[i]);
      out.test.labels.push_back(edges.labels[i]);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

EdgeList edges_within(const Graph& g, const TriSplit& split, Role role) {
  EdgeList out;
  const auto want = static_cast<uint8_t>(role);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (split.role[u] != want) continue;
    for (NodeId v : g.neighbors(u)) {
      if (u < v && split.role[v] == want) out.edges.emplace_back(u, v);
    }
  }
  return out;
}

Graph induced_subgraph(const Graph& g, const std::vector<uint8_t>& keep) {
  EdgeList el;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (!keep[u]) continue;
    for (NodeId v : g.neighbors(u)) {
      if (u < v && keep[v]) el.edges.emplace_back(u, v);
    }
  }
  Graph out(g.num_nodes(), el.edges);
  out.asins = g.asins;
  out.node_index = g.node_index;
  return out;
}

Graph subgraph_from_edges(uint64_t num_nodes, const EdgeList& edges) {
  EdgeList el = edges;
  el.canonicalize();
  return Graph(num_nodes, el.edges);
}

void save_copg(const std::string& path, const Graph& g) {
  auto os = binio::open_out(path);
  binio::write_magic(os, kGraphMagic);
  binio::write_le<uint64_t>(os, g.num_nodes());
  binio::write_le<uint64_t>(os, g.num_edges());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) {
        binio::write_le<uint32_t>(os, u);
        binio::write_le<uint32_t>(os, v);
      }
    }
  }
  if (!os) throw ContractError("write failed: " + path);
}

Graph load_copg(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kGraphMagic, path.c_str());
  const auto n = binio::read_le<uint64_t>(is, "node count");
  const auto m = binio::read_le<uint64_t>(is, "edge count");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (uint64_t i = 0; i < m; ++i) {
    const auto u = binio::read_le<uint32_t>(is, "edge u");
    const auto v = binio::read_le<uint32_t>(is, "edge v");
    edges.emplace_back(u, v);
  }
  return Graph(n, edges);
}

void save_labeled_tsv(const std::string& path, const LabeledEdgeSet& set) {
  std::ofstream os(path);
  if (!os) throw ContractError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < set.edges.size(); ++i) {
    os << set.edges[i].first << '\t' << set.edges[i].second << '\t'
       << static_cast<int>(set.labels[i]) << '\n';
  }
}

LabeledEdgeSet load_labeled_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open for reading: " + path);
  LabeledEdgeSet out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    uint32_t u, v;
    int label;
    if (!(ss >> u >> v >> label)) throw CorruptFile("bad edge line in " + path);
    out.edges.emplace_back(u, v);
    out.labels.push_back(static_cast<uint8_t>(label));
  }
  return out;
}

void save_node_map_tsv(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw ContractError("cannot open for writing: " + path);
  for (NodeId i = 0; i < g.asins.size(); ++i) os << i << '\t' << g.asins[i] << '\n';
}

void load_node_map_tsv(const std::string& path, Graph& g) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open for reading: " + path);
  g.asins.assign(g.num_nodes(), "");
  g.node_index.clear();
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw CorruptFile("bad node map line in " + path);
    const auto id = static_cast<NodeId>(std::stoul(line.substr(0, tab)));
    if (id >= g.num_nodes()) throw CorruptFile("node id out of range in " + path);
    g.asins[id] = line.substr(tab + 1);
    g.node_index.emplace(g.asins[id], id);
  }
}

}  // namespace copg::graph
