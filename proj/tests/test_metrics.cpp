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

#include <cmath>

#include "copg/errors.hpp"
#include "copg/metrics.hpp"
#include "copg/rng.hpp"

using namespace copg;

namespace {

// Brute-force AUC: concordant pairs over all pos x neg pairs, half credit
// for ties.
double auc_oracle(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

// Brute-force AP: precision recomputed from scratch at every positive rank.
double ap_oracle(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::size_t total_pos = 0;
  for (uint8_t l : labels) total_pos += l;
  double ap = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!labels[order[rank]]) continue;
    std::size_t hits = 0;
    for (std::size_t r = 0; r <= rank; ++r) hits += labels[order[r]];
    ap += (static_cast<double>(hits) / static_cast<double>(rank + 1)) /
          static_cast<double>(total_pos);
  }
  return ap;
}

std::pair<std::vector<double>, std::vector<uint8_t>> random_instance(rng::Rng& gen,
                                                                     std::size_t max_n) {
  const std::size_t n = 2 + gen.bounded(max_n - 1);
  std::vector<double> scores(n);
  std::vector<uint8_t> labels(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    // Quantized scores so ties actually happen.
    scores[i] = std::floor(gen.uniform01() * 32.0) / 32.0;
    labels[i] = static_cast<uint8_t>(gen.bounded(2));
    has_pos |= labels[i] == 1;
    has_neg |= labels[i] == 0;
  }
  if (!has_pos) labels[0] = 1;
  if (!has_neg) labels[n - 1] = 0;
  return {scores, labels};
}

}  // namespace

TEST_CASE("auc and ap match brute-force oracles to 1e-12 on 1000 instances") {
  rng::Rng gen(2024);
  for (int t = 0; t < 1000; ++t) {
    auto [scores, labels] = random_instance(gen, 1000);
    CHECK(metrics::auc(scores, labels) ==
          doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
    CHECK(metrics::average_precision(scores, labels) ==
          doctest::Approx(ap_oracle(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("auc worked examples") {
  SUBCASE("perfect separation") {
    std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    std::vector<uint8_t> l{1, 1, 0, 0};
    CHECK(metrics::auc(s, l) == doctest::Approx(1.0));
  }
  SUBCASE("alternating ranks give 0.75") {
    std::vector<double> s{0.9, 0.8, 0.7, 0.6};
    std::vector<uint8_t> l{1, 0, 1, 0};
    CHECK(metrics::auc(s, l) == doctest::Approx(0.75));
  }
  SUBCASE("all scores equal is 0.5 via midranks") {
    std::vector<double> s{0.4, 0.4, 0.4, 0.4};
    std::vector<uint8_t> l{1, 0, 1, 0};
    CHECK(metrics::auc(s, l) == doctest::Approx(0.5));
  }
}

TEST_CASE("ap worked examples") {
  SUBCASE("all positives ranked first") {
    std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    std::vector<uint8_t> l{1, 1, 0, 0};
    CHECK(metrics::average_precision(s, l) == doctest::Approx(1.0));
  }
  SUBCASE("alternating ranks give (1 + 2/3)/2") {
    std::vector<double> s{0.9, 0.8, 0.7, 0.6};
    std::vector<uint8_t> l{1, 0, 1, 0};
    CHECK(metrics::average_precision(s, l) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  }
  SUBCASE("single positive ranked last of n is 1/n") {
    for (std::size_t n : {3, 7, 20}) {
      std::vector<double> s(n);
      std::vector<uint8_t> l(n, 0);
      for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 - static_cast<double>(i) * 0.01;
      l[n - 1] = 1;
      CHECK(metrics::average_precision(s, l) ==
            doctest::Approx(1.0 / static_cast<double>(n)));
    }
  }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  rng::Rng gen(5);
  for (int t = 0; t < 20; ++t) {
    auto [scores, labels] = random_instance(gen, 200);
    const double base = metrics::auc(scores, labels);
    std::vector<double> exp_scores(scores.size()), affine(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      exp_scores[i] = std::exp(scores[i]);
      affine[i] = 3.5 * scores[i] + 11.0;
    }
    CHECK(metrics::auc(exp_scores, labels) == doctest::Approx(base).epsilon(1e-12));
    CHECK(metrics::auc(affine, labels) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("degenerate label sets are rejected") {
  std::vector<double> s{0.5, 0.6};
  std::vector<uint8_t> all_pos{1, 1}, all_neg{0, 0};
  CHECK_THROWS_AS(metrics::auc(s, all_pos), DegenerateLabels);
  CHECK_THROWS_AS(metrics::auc(s, all_neg), DegenerateLabels);
  CHECK_THROWS_AS(metrics::average_precision(s, all_neg), DegenerateLabels);
}

TEST_CASE("recall@k and ndcg@k") {
  SUBCASE("all relevant in top-k") {
    metrics::RankedQuery q;
    q.scores = {0.9, 0.8, 0.1, 0.05};
    q.relevant = {1, 1, 0, 0};
    std::vector<metrics::RankedQuery> qs{q};
    CHECK(metrics::recall_at_k(qs, 10) == doctest::Approx(1.0));
    CHECK(metrics::ndcg_at_k(qs, 10) == doctest::Approx(1.0));
  }
  SUBCASE("one relevant item at rank 2 gives ndcg 1/log2(3)") {
    metrics::RankedQuery q;
    q.scores = {0.9, 0.8, 0.1};
    q.relevant = {0, 1, 0};
    std::vector<metrics::RankedQuery> qs{q};
    CHECK(metrics::ndcg_at_k(qs, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  }
  SUBCASE("nothing relevant in the top-k scores zero") {
    metrics::RankedQuery q;
    q.scores = {0.9, 0.8, 0.1};
    q.relevant = {0, 0, 1};
    std::vector<metrics::RankedQuery> qs{q};
    CHECK(metrics::recall_at_k(qs, 2) == doctest::Approx(0.0));
    CHECK(metrics::ndcg_at_k(qs, 2) == doctest::Approx(0.0));
  }
  SUBCASE("queries without relevant items are excluded from the mean") {
    metrics::RankedQuery with, without;
    with.scores = {0.9, 0.1};
    with.relevant = {1, 0};
    without.scores = {0.9, 0.1};
    without.relevant = {0, 0};
    std::vector<metrics::RankedQuery> qs{with, without};
    CHECK(metrics::recall_at_k(qs, 1) == doctest::Approx(1.0));
  }
}
