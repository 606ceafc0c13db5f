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

#ifndef COPG_SYNTHETIC_HPP_
#define COPG_SYNTHETIC_HPP_

#include <cstdint>
#include <vector>

#include "copg/features.hpp"
#include "copg/graph.hpp"

namespace copg::synth {

struct SyntheticSpec {
  enum class Kind { kPlantedPartition, kPath, kStar, kTriangle, kErdosRenyi };
  enum class FeatureMode { kClusterSignal, kRandom, kOneHotId };

  Kind kind = Kind::kPlantedPartition;
  uint32_t n = 100;
  uint32_t clusters = 2;
  double p_in = 0.2;    // intra-cluster edge probability
  double p_out = 0.01;  // inter-cluster edge probability
  double er_p = 0.1;    // Erdos-Renyi edge probability

  FeatureMode feature_mode = FeatureMode::kClusterSignal;
  uint32_t feature_dim = 16;
  double noise = 0.5;  // cluster-signal noise scale

  // Negatives per positive in the emitted labeled set; clamped to the size
  // of the complement so tiny graphs stay generatable.
  double neg_ratio = 1.0;

  uint64_t seed = 1;
};

struct SyntheticData {
  graph::Graph g;
  features::FeatureMatrix feats;
  graph::LabeledEdgeSet labeled;  // all positives plus sampled negatives
  std::vector<uint32_t> cluster;  // cluster id per node (0 when not clustered)
};

SyntheticData generate(const SyntheticSpec& spec);

}  // namespace copg::synth

#endif  // COPG_SYNTHETIC_HPP_
