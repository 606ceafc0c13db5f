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

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "copg/synthetic.hpp"
#include "copg/trainer.hpp"
#include "helpers.hpp"

using namespace copg;
using trainer::ModelKind;

namespace {

// Shared planted-partition data; features carry the cluster signal.
struct Fixture {
  synth::SyntheticData data;
  graph::TriSplit split;
  trainer::TrainData td;

  explicit Fixture(uint32_t n = 100, uint64_t seed = 4) {
    synth::SyntheticSpec spec;
    spec.kind = synth::SyntheticSpec::Kind::kPlantedPartition;
    spec.n = n;
    spec.clusters = 2;
    spec.p_in = 0.25;
    spec.p_out = 0.01;
    spec.feature_dim = 8;
    spec.noise = 0.4;
    spec.seed = seed;
    data = synth::generate(spec);
    auto ns = graph::inductive_node_split(data.g, 0.8, seed + 1);
    split = graph::carve_validation(data.g, ns, 0.15, seed + 2);
    td = trainer::make_train_data(data.g, split, &data.feats, 1.0, seed + 3);
  }
};

trainer::TrainConfig quick_sage_config() {
  auto cfg = trainer::default_config(ModelKind::kGraphSage);
  cfg.model_cfg.hidden_dim = 16;
  cfg.model_cfg.out_dim = 16;
  cfg.lr = ad::LrSchedule::constant(0.01);
  cfg.epochs = 40;
  cfg.batch_size = 256;
  cfg.neg_ratio = 1.0;
  cfg.loss.pos_weight = 1.0;
  cfg.fanout = {5, 5};
  cfg.weight_decay = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("early stopper contract") {
  trainer::EarlyStopper s(2);
  CHECK(s.observe(0.7, 1));       // first observation improves
  CHECK_FALSE(s.observe(0.7, 2)); // equal is not an improvement
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.observe(0.65, 3));
  CHECK(s.should_stop());         // exactly at patience
  CHECK(s.best() == 0.7);
  CHECK(s.best_epoch() == 1);
  CHECK_THROWS_AS(trainer::EarlyStopper(0), ContractError);
}

TEST_CASE("frozen model stops at patience+1 with parameters untouched") {
  Fixture f;
  auto cfg = quick_sage_config();
  cfg.lr = ad::LrSchedule::constant(1e-12);  // schedule floor keeps lr positive
  cfg.lr.base = 0.0;                          // frozen: no updates at all
  cfg.patience = 2;
  cfg.epochs = 50;

  auto scorer_probe = trainer::make_scorer(cfg, f.td, 11);
  std::vector<Matf> before;
  for (const auto& p : scorer_probe->parameters()) before.push_back(p->value);

  auto result = trainer::train(cfg, f.td, 11);
  CHECK(result.history.size() == 3);           // epochs 1..patience+1
  CHECK(result.best_epoch == 1);

  // Same seed, same init: the returned scorer's parameters are bitwise the
  // initial ones because lr was zero.
  auto after = result.scorer->parameters();
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    REQUIRE(after[i]->value.size() == before[i].size());
    for (std::size_t j = 0; j < before[i].size(); ++j) {
      CHECK(after[i]->value[j] == before[i][j]);
    }
  }
}

TEST_CASE("best checkpoint equals the history maximum exactly") {
  Fixture f;
  auto cfg = quick_sage_config();
  cfg.epochs = 12;
  cfg.patience = 20;
  auto result = trainer::train(cfg, f.td, 7);
  REQUIRE(!result.history.empty());
  double best = -1.0;
  for (const auto& h : result.history) best = std::max(best, h.val_auc);
  CHECK(result.best_val_auc == best);
  CHECK(result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_auc == best);
}

TEST_CASE("evaluation of a fixed checkpoint is deterministic") {
  Fixture f;
  auto cfg = quick_sage_config();
  cfg.epochs = 5;
  auto result = trainer::train(cfg, f.td, 3);
  result.scorer->bind(&f.td.val_graph, nullptr);
  auto a = trainer::evaluate_split(*result.scorer, cfg, f.td.val_set, cfg.eval_seed);
  auto b = trainer::evaluate_split(*result.scorer, cfg, f.td.val_set, cfg.eval_seed);
  CHECK(a.loss == b.loss);
  CHECK(a.acc == b.acc);
  CHECK(a.auc == b.auc);
  CHECK(a.ap == b.ap);
}

TEST_CASE("training runs are reproducible per seed") {
  Fixture f;
  auto cfg = quick_sage_config();
  cfg.epochs = 6;
  auto r1 = trainer::train(cfg, f.td, 21);
  auto r2 = trainer::train(cfg, f.td, 21);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_auc == r2.history[i].val_auc);
  }
}

TEST_CASE("graphsage learns the planted structure quickly") {
  Fixture f(120, 9);
  auto cfg = quick_sage_config();
  cfg.epochs = 60;
  cfg.patience = 60;
  auto result = trainer::train(cfg, f.td, 5);
  double best_train = 0;
  for (const auto& h : result.history) best_train = std::max(best_train, h.train_auc);
  CHECK(best_train >= 0.9);
}

TEST_CASE("replicate reports zero spread for a repeated seed") {
  Fixture f;
  auto cfg = quick_sage_config();
  cfg.epochs = 4;
  std::vector<uint64_t> seeds{13, 13};
  auto report = trainer::replicate(cfg, f.td, seeds);
  REQUIRE(report.per_seed_val.size() == 2);
  CHECK(report.stddev.auc == 0.0);
  CHECK(report.stddev.loss == 0.0);
  CHECK(report.has_std);
  CHECK(report.mean.auc == report.per_seed_val[0].auc);

  std::vector<uint64_t> one{13};
  auto single = trainer::replicate(cfg, f.td, one);
  CHECK_FALSE(single.has_std);
}

TEST_CASE("random search") {
  Fixture f;
  auto base = quick_sage_config();
  base.epochs = 3;
  base.patience = 3;

  SUBCASE("a one-point space returns that configuration") {
    trainer::SearchSpace space;
    space.params["hidden_dim"] = {nlohmann::json(8)};
    auto result = trainer::random_search(space, 3, base, f.td, 1);
    CHECK(result.trials.size() == 1);  // deduplicated
    CHECK(result.best_config.model_cfg.hidden_dim == 8);
    CHECK(result.best_drawn["hidden_dim"] == 8);
  }

  SUBCASE("trials beyond the grid size evaluate each config at most once") {
    trainer::SearchSpace space;
    space.params["hidden_dim"] = {nlohmann::json(8), nlohmann::json(16)};
    space.params["lr"] = {nlohmann::json(0.01), nlohmann::json(0.001)};
    std::ostringstream log;
    auto result = trainer::random_search(space, 10, base, f.td, 2, &log);
    CHECK(result.trials.size() <= 4);
    std::set<std::string> distinct;
    for (const auto& t : result.trials) distinct.insert(t.drawn.dump());
    CHECK(distinct.size() == result.trials.size());
    // JSONL log: one object per line.
    std::istringstream lines(log.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      auto j = nlohmann::json::parse(line);
      CHECK(j.contains("val_auc"));
      ++rows;
    }
    CHECK(rows == result.trials.size());
  }

  SUBCASE("unknown search keys are config errors") {
    trainer::TrainConfig probe = base;
    CHECK_THROWS_AS(trainer::apply_search_assignment(probe, "warp_speed", nlohmann::json(9)),
                    ConfigError);
  }

  SUBCASE("best-by-auc is consistent with the trial log") {
    trainer::SearchSpace space;
    space.params["lr"] = {nlohmann::json(0.05), nlohmann::json(0.005)};
    auto result = trainer::random_search(space, 2, base, f.td, 3);
    double best = -1;
    for (const auto& t : result.trials) best = std::max(best, t.val_auc);
    CHECK(result.best_val_auc == best);
  }
}

TEST_CASE("make_train_data enforces inductiveness and negative purity") {
  Fixture f(80, 17);
  const auto& td = f.td;

  std::set<uint32_t> train(td.train_nodes.begin(), td.train_nodes.end());
  std::set<uint32_t> val(td.val_nodes.begin(), td.val_nodes.end());
  std::set<uint32_t> test(td.test_nodes.begin(), td.test_nodes.end());
  CHECK(train.size() + val.size() + test.size() == 80);
  for (uint32_t u : val) CHECK_FALSE(train.count(u));
  for (uint32_t u : test) {
    CHECK_FALSE(train.count(u));
    CHECK_FALSE(val.count(u));
  }

  for (const auto& [u, v] : td.train_pos.edges) {
    CHECK(train.count(u));
    CHECK(train.count(v));
  }
  for (std::size_t i = 0; i < td.val_set.size(); ++i) {
    const auto& [u, v] = td.val_set.edges[i];
    CHECK(val.count(u));
    CHECK(val.count(v));
    if (td.val_set.labels[i]) CHECK(f.data.g.has_edge(u, v));
    else CHECK_FALSE(f.data.g.has_edge(u, v));
  }
  for (std::size_t i = 0; i < td.test_set.size(); ++i) {
    const auto& [u, v] = td.test_set.edges[i];
    CHECK(test.count(u));
    CHECK(test.count(v));
    if (!td.test_set.labels[i]) CHECK_FALSE(f.data.g.has_edge(u, v));
  }

  // Per-split graphs only contain internal edges.
  for (uint32_t u = 0; u < 80; ++u) {
    for (uint32_t v : td.train_graph.neighbors(u)) {
      CHECK(train.count(u));
      CHECK(train.count(v));
    }
    for (uint32_t v : td.test_graph.neighbors(u)) {
      CHECK(test.count(u));
      CHECK(test.count(v));
    }
  }
}

TEST_CASE("transductive data splits edges, not nodes") {
  Fixture f(60, 23);
  auto td = trainer::make_train_data_transductive(f.data.g, 0.8, 0.1, &f.data.feats, 1.0, 5);
  CHECK(td.transductive);
  CHECK(td.train_nodes.size() == 60);

  std::size_t val_pos = 0, test_pos = 0;
  for (uint8_t l : td.val_set.labels) val_pos += l;
  for (uint8_t l : td.test_set.labels) test_pos += l;
  const auto total = f.data.g.num_edges();
  const auto train_side = static_cast<std::size_t>(std::llround(0.8 * double(total)));
  CHECK(td.train_pos.size() + val_pos == train_side);
  CHECK(test_pos == total - train_side);

  // No positive edge appears in two splits.
  std::set<graph::Edge> seen(td.train_pos.edges.begin(), td.train_pos.edges.end());
  for (std::size_t i = 0; i < td.val_set.size(); ++i) {
    if (td.val_set.labels[i]) CHECK(seen.insert(td.val_set.edges[i]).second);
  }
  for (std::size_t i = 0; i < td.test_set.size(); ++i) {
    if (td.test_set.labels[i]) CHECK(seen.insert(td.test_set.edges[i]).second);
  }
}

TEST_CASE("lightgcn trains transductively and scores all splits") {
  Fixture f(60, 29);
  auto td = trainer::make_train_data_transductive(f.data.g, 0.8, 0.1, nullptr, 1.0, 6);
  auto cfg = trainer::default_config(ModelKind::kLightGcn);
  cfg.model_cfg.emb_dim = 16;
  cfg.epochs = 10;
  cfg.lr = ad::LrSchedule::constant(0.05);
  cfg.batch_size = 512;
  auto result = trainer::train(cfg, td, 3);
  CHECK(!result.history.empty());
  CHECK(result.history.back().train_auc > 0.5);
}

TEST_CASE("pinsage and gat run end to end on the fixture") {
  Fixture f(70, 31);
  SUBCASE("pinsage") {
    auto cfg = trainer::default_config(ModelKind::kPinSage);
    cfg.model_cfg.hidden_dim = 16;
    cfg.model_cfg.out_dim = 8;
    cfg.epochs = 3;
    cfg.lr = ad::LrSchedule::constant(0.01);
    auto result = trainer::train(cfg, f.td, 3);
    CHECK(result.history.size() == 3);
  }
  SUBCASE("gat") {
    auto cfg = trainer::default_config(ModelKind::kGat);
    cfg.model_cfg.hidden_dim = 8;
    cfg.model_cfg.heads = 2;
    cfg.epochs = 3;
    cfg.batch_size = 256;
    auto result = trainer::train(cfg, f.td, 3);
    CHECK(result.history.size() == 3);
    CHECK(result.scorer->parameters().size() > 0);
  }
}

TEST_CASE("ranking metrics over the candidate-set protocol") {
  Fixture f(100, 37);
  auto cfg = quick_sage_config();
  cfg.epochs = 10;
  auto result = trainer::train(cfg, f.td, 5);
  result.scorer->bind(&f.td.test_graph, nullptr);
  auto rank = trainer::ranking_eval(*result.scorer, f.td, 10, 20, 99);
  CHECK(rank.queries > 0);
  CHECK(rank.recall >= 0.0);
  CHECK(rank.recall <= 1.0);
  CHECK(rank.ndcg >= 0.0);
  CHECK(rank.ndcg <= 1.0);
}

TEST_CASE("lightgcn inductive scoring with fresh embeddings stays near chance") {
  Fixture f(200, 41);
  auto cfg = trainer::default_config(ModelKind::kLightGcn);
  cfg.model_cfg.emb_dim = 64;
  auto m = trainer::lightgcn_inductive_eval(cfg, f.td.test_graph, f.td.test_set, 7);
  CHECK(m.auc > 0.2);
  CHECK(m.auc < 0.8);
}

TEST_CASE("history csv emits the documented header") {
  std::vector<trainer::EpochStats> hist(2);
  hist[0].epoch = 1;
  hist[1].epoch = 2;
  hist[1].val_auc = 0.75;
  const std::string path = "history_test.csv";
  trainer::save_history_csv(path, hist);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "epoch,train_loss,train_acc,train_auc,train_ap,val_loss,val_acc,val_auc,val_ap,seconds");
  std::string row1, row2;
  std::getline(is, row1);
  std::getline(is, row2);
  CHECK(row2.substr(0, 2) == "2,");
  is.close();
  std::remove(path.c_str());
}
