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

#ifndef COPG_RUN_CONFIG_HPP_
#define COPG_RUN_CONFIG_HPP_

#include <optional>
#include <string>

#include <json.hpp>

#include "copg/synthetic.hpp"
#include "copg/trainer.hpp"

namespace copg::cli {

// One JSON file drives the whole pipeline; every stage reads its own
// section. Unknown keys are errors, reported with their JSON pointer.
struct RunConfig {
  std::string workdir = "work";

  struct Paths {
    std::string input;                        // raw metadata text
    std::string merged = "merged.csv";
    std::string graph = "graph.copg";
    std::string node_map = "graph.nodes.tsv";
    std::string features = "features.ftm";
    std::string embeddings;                   // optional title-embedding file
    std::string splits = "splits";
    std::string walks = "walks.wlk";
    std::string runs = "runs";
  } paths;

  struct Dataset {
    int category_depth = 4;
    bool keep_discontinued = false;
  } dataset;

  struct Split {
    double ratio = 0.8;
    double val_fraction = 0.1;
    uint64_t seed = 1;
    bool transductive = false;
    double eval_neg_ratio = 1.0;
  } split;

  struct Features {
    int title_dim = 384;
    int path_dim = 200;
    std::optional<int> pca_target;
    int max_groups = 10;
    bool fit_group_vocab = false;  // default: the fixed ten-domain vocabulary
    uint64_t seed = 7;
  } features;

  synth::SyntheticSpec synth;

  trainer::TrainConfig train;

  trainer::SearchSpace search_space;
  int search_trials = 10;
  uint64_t search_seed = 5;

  nlohmann::json raw;  // canonical echo used for hashing
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig validate_config(const std::string& path);
uint64_t config_hash(const RunConfig& cfg);

// Records per-stage input/output digests so unchanged stages are provably
// reproducible. Stored as <workdir>/manifest.json.
void manifest_update_stage(const std::string& workdir, const std::string& stage,
                           const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs, uint64_t config_hash);

// Exclusive workdir ownership via a lock file; throws ContractError when the
// directory is already locked.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::string& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::string path_;
};

}  // namespace copg::cli

#endif  // COPG_RUN_CONFIG_HPP_
