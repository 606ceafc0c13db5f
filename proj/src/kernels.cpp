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

#include "copg/kernels.hpp"

#include <atomic>

namespace copg::kernels {

namespace {
#if defined(_OPENMP)
std::atomic<bool> g_parallel{true};
#else
std::atomic<bool> g_parallel{false};
#endif
}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

void set_parallel(bool on) {
#if !defined(_OPENMP)
  on = false;
#endif
  g_parallel.store(on, std::memory_order_relaxed);
}

std::vector<std::size_t> segment_offsets(const std::vector<uint32_t>& seg_ids,
                                         std::size_t num_segments) {
  std::vector<std::size_t> offsets(num_segments + 1, 0);
  for (std::size_t i = 0; i < seg_ids.size(); ++i) {
    if (i > 0 && seg_ids[i] < seg_ids[i - 1]) {
      throw ContractError("segment ids must be sorted non-decreasing");
    }
    if (seg_ids[i] >= num_segments) {
      throw ContractError("segment id " + std::to_string(seg_ids[i]) + " out of range");
    }
    ++offsets[seg_ids[i] + 1];
  }
  for (std::size_t s = 0; s < num_segments; ++s) offsets[s + 1] += offsets[s];
  return offsets;
}

}  // namespace copg::kernels
