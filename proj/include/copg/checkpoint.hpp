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

#ifndef COPG_CHECKPOINT_HPP_
#define COPG_CHECKPOINT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "copg/mat.hpp"

namespace copg::ad {

// CKPT1 layout: magic, u32 param count, then per parameter
// (u16 name length + bytes, u32 rows, u32 cols, f32 row-major data),
// then a footer: u8 has_optimizer and, when set, u64 step count followed by
// the first- and second-moment matrices in parameter order (shapes implied).
struct Checkpoint {
  std::vector<std::pair<std::string, Matf>> params;
  bool has_optimizer = false;
  uint64_t step_count = 0;
  std::vector<Matf> first_moments;
  std::vector<Matf> second_moments;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace copg::ad

#endif  // COPG_CHECKPOINT_HPP_
