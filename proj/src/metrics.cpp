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

#include "copg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "copg/errors.hpp"

namespace copg::metrics {

double auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("auc: scores vs labels");
  std::size_t pos = 0;
  for (uint8_t l : labels) pos += l ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabels("auc needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: tied scores all receive the mean of their 1-based rank range.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) pos_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double average_precision(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("ap: scores vs labels");
  std::size_t pos = 0;
  for (uint8_t l : labels) pos += l ? 1 : 0;
  if (pos == 0) throw DegenerateLabels("average precision needs >= 1 positive");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      ++hits;
      const double precision = static_cast<double>(hits) / static_cast<double>(rank + 1);
      ap += precision / static_cast<double>(pos);  // (R_k - R_{k-1}) = 1/pos per hit
    }
  }
  return ap;
}

namespace {

// Indices of the top-k scores, ties by ascending original index.
std::vector<std::size_t> top_k_order(const RankedQuery& q, int k) {
  std::vector<std::size_t> order(q.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (q.scores[a] != q.scores[b]) return q.scores[a] > q.scores[b];
    return a < b;
  });
  if (order.size() > static_cast<std::size_t>(k)) order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

double recall_at_k(std::span<const RankedQuery> queries, int k) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& q : queries) {
    std::size_t relevant = 0;
    for (uint8_t r : q.relevant) relevant += r ? 1 : 0;
    if (relevant == 0) continue;
    std::size_t hits = 0;
    for (std::size_t idx : top_k_order(q, k)) {
      if (q.relevant[idx]) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(relevant);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double ndcg_at_k(std::span<const RankedQuery> queries, int k) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& q : queries) {
    std::size_t relevant = 0;
    for (uint8_t r : q.relevant) relevant += r ? 1 : 0;
    if (relevant == 0) continue;
    double dcg = 0.0;
    const auto order = top_k_order(q, k);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (q.relevant[order[rank]]) {
        dcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
      }
    }
    double idcg = 0.0;
    const auto ideal = std::min<std::size_t>(relevant, static_cast<std::size_t>(k));
    for (std::size_t rank = 0; rank < ideal; ++rank) {
      idcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
    }
    sum += dcg / idcg;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

}  // namespace copg::metrics
