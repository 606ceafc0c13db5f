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

#ifndef COPG_METRICS_HPP_
#define COPG_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace copg::metrics {

// Mann-Whitney rank-statistic AUC with midrank tie handling. Throws
// DegenerateLabels unless both classes are present.
double auc(std::span<const double> scores, std::span<const uint8_t> labels);

// Step-wise area under the precision-recall curve over descending-score
// ranks; ties broken by ascending original index. Throws DegenerateLabels
// when no positive exists.
double average_precision(std::span<const double> scores, std::span<const uint8_t> labels);

// One ranked candidate list per query node.
struct RankedQuery {
  std::vector<double> scores;
  std::vector<uint8_t> relevant;
};

// Mean over queries with >= 1 relevant item; queries without relevant items
// are excluded. Returns 0 when no query qualifies.
double recall_at_k(std::span<const RankedQuery> queries, int k);

// Binary gains with log2 position discount.
double ndcg_at_k(std::span<const RankedQuery> queries, int k);

}  // namespace copg::metrics

#endif  // COPG_METRICS_HPP_
