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

#include "copg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "copg/binio.hpp"
#include "copg/errors.hpp"
#include "copg/kernels.hpp"
#include "copg/rng.hpp"
#include "copg/version.hpp"

namespace copg::sampler {

namespace {

// Candidate provider for one hop: fills (ids, weights) for a dst node.
// Unweighted providers leave weights empty.
using HopSampler =
    std::function<void(uint32_t dst, uint64_t layer_tag, std::vector<uint32_t>& ids,
                       std::vector<double>& weights)>;

Block build_layers(std::span<const uint32_t> seeds, std::size_t depth,
                   const HopSampler& hop_sampler, bool weighted) {
  // Unique sorted seed set defines the innermost dst list.
  std::vector<uint32_t> dst(seeds.begin(), seeds.end());
  std::sort(dst.begin(), dst.end());
  dst.erase(std::unique(dst.begin(), dst.end()), dst.end());

  Block block;
  block.layers.resize(depth);
  std::vector<uint32_t> cand_ids;
  std::vector<double> cand_w;
  for (std::size_t h = 0; h < depth; ++h) {
    BlockLayer& layer = block.layers[depth - 1 - h];  // innermost hop fills the last slot
    layer.dst_nodes = dst;

    // src = dst ++ newly discovered frontier nodes (sorted for determinism).
    std::unordered_map<uint32_t, uint32_t> src_local;
    src_local.reserve(dst.size() * 2);
    layer.src_nodes = dst;
    for (uint32_t i = 0; i < dst.size(); ++i) src_local.emplace(dst[i], i);

    std::vector<uint32_t> extra;
    std::vector<std::vector<uint32_t>> per_dst_ids(dst.size());
    std::vector<std::vector<double>> per_dst_w(dst.size());
    for (uint32_t di = 0; di < dst.size(); ++di) {
      cand_ids.clear();
      cand_w.clear();
      hop_sampler(dst[di], h, cand_ids, cand_w);
      per_dst_ids[di] = cand_ids;
      per_dst_w[di] = cand_w;
      for (uint32_t u : cand_ids) {
        if (!src_local.count(u)) {
          src_local.emplace(u, 0);  // placeholder; re-indexed below
          extra.push_back(u);
        }
      }
    }
    std::sort(extra.begin(), extra.end());
    for (uint32_t u : extra) {
      src_local[u] = static_cast<uint32_t>(layer.src_nodes.size());
      layer.src_nodes.push_back(u);
    }

    for (uint32_t di = 0; di < dst.size(); ++di) {
      for (std::size_t e = 0; e < per_dst_ids[di].size(); ++e) {
        layer.edge_src.push_back(src_local[per_dst_ids[di][e]]);
        layer.edge_dst.push_back(di);
        if (weighted) layer.edge_weight.push_back(per_dst_w[di][e]);
      }
    }
    dst = layer.src_nodes;  // next hop expands the widened set
  }
  return block;
}

}  // namespace

Block sample_block(const graph::Graph& g, std::span<const uint32_t> seeds,
                   const FanoutSpec& fanout, uint64_t seed) {
  for (uint32_t cap : fanout) {
    if (cap < 1) throw ContractError("fanout caps must be >= 1");
  }
  for (uint32_t s : seeds) {
    if (s >= g.num_nodes()) throw ContractError("block seed out of range");
  }
  auto hop = [&g, seed, &fanout](uint32_t dst_node, uint64_t layer_tag,
                                 std::vector<uint32_t>& ids, std::vector<double>& weights) {
    weights.clear();
    const auto nbrs = g.neighbors(dst_node);
    const uint32_t cap = fanout[layer_tag];
    if (nbrs.size() <= cap) {
      ids.assign(nbrs.begin(), nbrs.end());
      return;
    }
    ids.assign(nbrs.begin(), nbrs.end());
    rng::Rng r(rng::derive(seed, layer_tag, dst_node));
    r.partial_shuffle(ids, cap);
    ids.resize(cap);
    std::sort(ids.begin(), ids.end());
  };
  return build_layers(seeds, fanout.size(), hop, /*weighted=*/false);
}

WalkTable precompute_walks(const graph::Graph& g, uint32_t num_walks, uint32_t walk_length,
                           uint32_t topk, uint64_t seed) {
  if (num_walks < 1 || walk_length < 1) {
    throw ContractError("walk parameters must be >= 1");
  }
  WalkTable out;
  out.num_walks = num_walks;
  out.walk_length = walk_length;
  out.topk = topk;
  out.seed = seed;

  const auto n = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<std::pair<uint32_t, double>>> entries(n);

  // Walks are independent per start node; per-node derived seeds keep the
  // result identical for any thread count.
  kernels::parallel_for(n, num_walks * walk_length * 8, [&](std::size_t start) {
    if (g.degree(static_cast<uint32_t>(start)) == 0) return;
    std::unordered_map<uint32_t, uint32_t> visits;
    for (uint32_t w = 0; w < num_walks; ++w) {
      rng::Rng r(rng::derive(seed, start, w));
      uint32_t cur = static_cast<uint32_t>(start);
      for (uint32_t step = 0; step < walk_length; ++step) {
        const auto nbrs = g.neighbors(cur);
        if (nbrs.empty()) break;
        cur = nbrs[r.bounded(nbrs.size())];
        if (cur != start) ++visits[cur];  // every visited non-start node counts
      }
    }
    if (visits.empty()) return;
    std::vector<std::pair<uint32_t, uint32_t>> counted(visits.begin(), visits.end());
    std::sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;  // ties by ascending node id
    });
    if (counted.size() > topk) counted.resize(topk);
    double total = 0.0;
    for (const auto& [_, c] : counted) total += c;
    auto& entry = entries[start];
    entry.reserve(counted.size());
    for (const auto& [id, c] : counted) {
      entry.emplace_back(id, static_cast<double>(c) / total);
    }
  });

  out.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out.offsets[i + 1] = out.offsets[i] + static_cast<uint32_t>(entries[i].size());
  }
  out.ids.resize(out.offsets[n]);
  out.weights.resize(out.offsets[n]);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t at = out.offsets[i];
    for (const auto& [id, w] : entries[i]) {
      out.ids[at] = id;
      out.weights[at] = w;
      ++at;
    }
  }
  return out;
}

Block importance_block(const WalkTable& table, std::span<const uint32_t> seeds, uint32_t depth,
                       uint32_t cap, uint64_t seed) {
  if (cap < 1 || depth < 1) throw ContractError("importance block needs cap, depth >= 1");
  auto hop = [&table, seed, cap](uint32_t dst_node, uint64_t layer_tag,
                                 std::vector<uint32_t>& ids, std::vector<double>& weights) {
    const auto entry_ids = table.neighbor_ids(dst_node);
    const auto entry_w = table.neighbor_weights(dst_node);
    ids.clear();
    weights.clear();
    if (entry_ids.empty()) return;
    if (entry_ids.size() <= cap) {
      ids.assign(entry_ids.begin(), entry_ids.end());
      weights.assign(entry_w.begin(), entry_w.end());
    } else {
      // Weighted sampling without replacement: repeated roulette draws over
      // the remaining mass.
      std::vector<uint32_t> pool_ids(entry_ids.begin(), entry_ids.end());
      std::vector<double> pool_w(entry_w.begin(), entry_w.end());
      rng::Rng r(rng::derive(seed, layer_tag, dst_node));
      for (uint32_t pick = 0; pick < cap; ++pick) {
        double total = 0.0;
        for (double w : pool_w) total += w;
        double target = r.uniform01() * total;
        std::size_t chosen = pool_ids.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < pool_ids.size(); ++i) {
          acc += pool_w[i];
          if (target < acc) {
            chosen = i;
            break;
          }
        }
        ids.push_back(pool_ids[chosen]);
        weights.push_back(pool_w[chosen]);
        pool_ids.erase(pool_ids.begin() + static_cast<std::ptrdiff_t>(chosen));
        pool_w.erase(pool_w.begin() + static_cast<std::ptrdiff_t>(chosen));
      }
    }
    // Per-dst weights renormalize to sum to 1.
    double total = 0.0;
    for (double w : weights) total += w;
    if (total > 0.0) {
      for (double& w : weights) w /= total;
    }
  };
  return build_layers(seeds, depth, hop, /*weighted=*/true);
}

std::vector<LinkBatch> link_batches(const graph::EdgeList& positives,
                                    const graph::Graph& g_reject,
                                    const std::vector<uint32_t>& node_set, std::size_t batch_size,
                                    double neg_ratio, const BlockBuilder& builder,
                                    uint64_t run_seed, uint64_t epoch) {
  if (batch_size < 1) throw ContractError("batch size must be >= 1");

  const std::size_t neg_count = static_cast<std::size_t>(
      std::ceil(neg_ratio * static_cast<double>(positives.size())));
  graph::EdgeList negatives;
  if (neg_count > 0) {
    negatives = graph::sample_negative_count(g_reject, neg_count,
                                             rng::derive(run_seed, 0x6e6567, epoch), &node_set);
  }

  std::vector<std::pair<graph::Edge, uint8_t>> all;
  all.reserve(positives.size() + negatives.size());
  for (const auto& e : positives.edges) all.emplace_back(e, 1);
  for (const auto& e : negatives.edges) all.emplace_back(e, 0);
  rng::Rng shuffler(rng::derive(run_seed, 0x736866, epoch));
  shuffler.shuffle(all);

  std::vector<LinkBatch> out;
  for (std::size_t at = 0; at < all.size(); at += batch_size) {
    const std::size_t end = std::min(all.size(), at + batch_size);
    LinkBatch batch;
    std::vector<uint32_t> endpoints;
    for (std::size_t i = at; i < end; ++i) {
      batch.edges.push_back(all[i].first);
      batch.labels.push_back(all[i].second);
      endpoints.push_back(all[i].first.first);
      endpoints.push_back(all[i].first.second);
    }
    if (builder) {
      batch.block = builder(endpoints, rng::derive(run_seed, epoch, out.size()));
    }
    out.push_back(std::move(batch));
  }
  return out;
}

void save_walks(const std::string& path, const WalkTable& t) {
  auto os = binio::open_out(path);
  binio::write_magic(os, kWalkMagic);
  binio::write_le<uint32_t>(os, t.num_walks);
  binio::write_le<uint32_t>(os, t.walk_length);
  binio::write_le<uint32_t>(os, t.topk);
  binio::write_le<uint64_t>(os, t.seed);
  const auto n = t.offsets.size() - 1;
  binio::write_le<uint64_t>(os, n);
  for (std::size_t u = 0; u < n; ++u) {
    const uint32_t count = t.offsets[u + 1] - t.offsets[u];
    binio::write_le<uint32_t>(os, count);
    for (uint32_t e = t.offsets[u]; e < t.offsets[u + 1]; ++e) {
      binio::write_le<uint32_t>(os, t.ids[e]);
      binio::write_le<float>(os, static_cast<float>(t.weights[e]));
    }
  }
  if (!os) throw ContractError("write failed: " + path);
}

WalkTable load_walks(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kWalkMagic, path.c_str());
  WalkTable t;
  t.num_walks = binio::read_le<uint32_t>(is, "num_walks");
  t.walk_length = binio::read_le<uint32_t>(is, "walk_length");
  t.topk = binio::read_le<uint32_t>(is, "topk");
  t.seed = binio::read_le<uint64_t>(is, "seed");
  const auto n = binio::read_le<uint64_t>(is, "node count");
  t.offsets.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    const auto count = binio::read_le<uint32_t>(is, "entry count");
    t.offsets[u + 1] = t.offsets[u] + count;
    double total = 0.0;
    for (uint32_t e = 0; e < count; ++e) {
      t.ids.push_back(binio::read_le<uint32_t>(is, "walk id"));
      t.weights.push_back(static_cast<double>(binio::read_le<float>(is, "walk weight")));
      total += t.weights.back();
    }
    // Weights are stored as f32 on disk; renormalize so each entry sums to 1
    // exactly again.
    if (total > 0.0) {
      for (uint32_t e = 0; e < count; ++e) {
        t.weights[t.offsets[u] + e] /= total;
      }
    }
  }
  return t;
}

}  // namespace copg::sampler
