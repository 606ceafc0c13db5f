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

#ifndef COPG_KERNELS_HPP_
#define COPG_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "copg/mat.hpp"

// Dense and segment kernels behind the autodiff ops. Every kernel exists in
// two variants: kernels::serial is the reference implementation, and
// kernels::omp parallelizes over independent output elements so results are
// bit-identical to the serial path for any thread count. The unqualified
// kernels:: entry points dispatch on parallel_enabled() and a grain size.
namespace copg::kernels {

bool parallel_enabled();
void set_parallel(bool on);

// Minimum number of scalar operations before the omp variant is worth using.
inline constexpr std::size_t kParallelGrain = 1 << 14;

namespace serial {

// C(m x n) = A(m x k) * B(k x n); inner products accumulate in double.
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += static_cast<double>(a[i * k + p]) * static_cast<double>(b[p * n + j]);
      }
      c[i * n + j] = static_cast<T>(acc);
    }
  }
}

// C(k x n) = A^T * B with A(m x k), B(m x n).
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        acc += static_cast<double>(a[p * k + i]) * static_cast<double>(b[p * n + j]);
      }
      c[i * n + j] = static_cast<T>(acc);
    }
  }
}

// C(m x k) = A * B^T with A(m x n), B(k x n).
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        acc += static_cast<double>(a[i * n + p]) * static_cast<double>(b[j * n + p]);
      }
      c[i * k + j] = static_cast<T>(acc);
    }
  }
}

// out(s x d): out[seg[r]] += values[r]. seg must be sorted non-decreasing;
// empty segments yield zero rows. seg_offsets has s+1 entries.
template <typename T>
void segment_sum(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                 std::size_t d, T* out) {
  for (std::size_t s = 0; s < num_segments; ++s) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t r = seg_offsets[s]; r < seg_offsets[s + 1]; ++r) {
        acc += static_cast<double>(values[r * d + c]);
      }
      out[s * d + c] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void segment_mean(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                  std::size_t d, T* out) {
  for (std::size_t s = 0; s < num_segments; ++s) {
    const std::size_t cnt = seg_offsets[s + 1] - seg_offsets[s];
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t r = seg_offsets[s]; r < seg_offsets[s + 1]; ++r) {
        acc += static_cast<double>(values[r * d + c]);
      }
      out[s * d + c] = cnt == 0 ? T(0) : static_cast<T>(acc / static_cast<double>(cnt));
    }
  }
}

// Per-segment softmax over a score vector, max-subtracted for stability.
template <typename T>
void segment_softmax(const T* scores, const std::size_t* seg_offsets, std::size_t num_segments,
                     T* out) {
  for (std::size_t s = 0; s < num_segments; ++s) {
    const std::size_t lo = seg_offsets[s], hi = seg_offsets[s + 1];
    if (lo == hi) continue;
    double mx = static_cast<double>(scores[lo]);
    for (std::size_t r = lo + 1; r < hi; ++r) {
      mx = std::max(mx, static_cast<double>(scores[r]));
    }
    double z = 0.0;
    for (std::size_t r = lo; r < hi; ++r) {
      z += std::exp(static_cast<double>(scores[r]) - mx);
    }
    for (std::size_t r = lo; r < hi; ++r) {
      out[r] = static_cast<T>(std::exp(static_cast<double>(scores[r]) - mx) / z);
    }
  }
}

template <typename T>
void gather_rows(const T* src, const uint32_t* idx, std::size_t n_idx, std::size_t d, T* out) {
  for (std::size_t i = 0; i < n_idx; ++i) {
    const T* from = src + static_cast<std::size_t>(idx[i]) * d;
    T* to = out + i * d;
    for (std::size_t c = 0; c < d; ++c) to[c] = from[c];
  }
}

// dst[idx[i]] += src[i]. Indices may repeat; kept serial so accumulation
// order is fixed.
template <typename T>
void scatter_add_rows(T* dst, const uint32_t* idx, std::size_t n_idx, std::size_t d,
                      const T* src) {
  for (std::size_t i = 0; i < n_idx; ++i) {
    T* to = dst + static_cast<std::size_t>(idx[i]) * d;
    const T* from = src + i * d;
    for (std::size_t c = 0; c < d; ++c) to[c] += from[c];
  }
}

enum class PropagateMode {
  kMean,           // out[i] = (1/deg_i) * sum_{j in N(i)} x[j]
  kMeanTranspose,  // out[i] = sum_{j in N(i)} x[j] / deg_j
  kSymmetric,      // out[i] = sum_{j in N(i)} x[j] / sqrt(deg_i * deg_j)
};

// Normalized adjacency application over a CSR graph; isolated nodes emit 0.
template <typename T>
void propagate(const uint64_t* offsets, const uint32_t* nbrs, std::size_t num_nodes, const T* x,
               std::size_t d, PropagateMode mode, T* out) {
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const uint64_t lo = offsets[i], hi = offsets[i + 1];
    const double deg_i = static_cast<double>(hi - lo);
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (uint64_t e = lo; e < hi; ++e) {
        const std::size_t j = nbrs[e];
        const double x_jc = static_cast<double>(x[j * d + c]);
        switch (mode) {
          case PropagateMode::kMean:
            acc += x_jc;
            break;
          case PropagateMode::kMeanTranspose: {
            const double deg_j = static_cast<double>(offsets[j + 1] - offsets[j]);
            acc += x_jc / deg_j;
            break;
          }
          case PropagateMode::kSymmetric: {
            const double deg_j = static_cast<double>(offsets[j + 1] - offsets[j]);
            acc += x_jc / std::sqrt(deg_i * deg_j);
            break;
          }
        }
      }
      if (mode == PropagateMode::kMean && deg_i > 0.0) acc /= deg_i;
      out[i * d + c] = static_cast<T>(acc);
    }
  }
}

// Fixed-order double-precision sum; the deterministic reduction used by
// losses and metrics.
template <typename T>
double reduce_sum(const T* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  return acc;
}

}  // namespace serial

namespace omp {

template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += static_cast<double>(a[i * k + p]) * static_cast<double>(b[p * n + j]);
      }
      c[i * n + j] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(k); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        acc += static_cast<double>(a[p * k + i]) * static_cast<double>(b[p * n + j]);
      }
      c[i * n + j] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        acc += static_cast<double>(a[i * n + p]) * static_cast<double>(b[j * n + p]);
      }
      c[i * k + j] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void segment_sum(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                 std::size_t d, T* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(num_segments); ++s) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t r = seg_offsets[s]; r < seg_offsets[s + 1]; ++r) {
        acc += static_cast<double>(values[r * d + c]);
      }
      out[s * d + c] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void segment_mean(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                  std::size_t d, T* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(num_segments); ++s) {
    const std::size_t cnt = seg_offsets[s + 1] - seg_offsets[s];
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t r = seg_offsets[s]; r < seg_offsets[s + 1]; ++r) {
        acc += static_cast<double>(values[r * d + c]);
      }
      out[s * d + c] = cnt == 0 ? T(0) : static_cast<T>(acc / static_cast<double>(cnt));
    }
  }
}

template <typename T>
void segment_softmax(const T* scores, const std::size_t* seg_offsets, std::size_t num_segments,
                     T* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(num_segments); ++s) {
    const std::size_t lo = seg_offsets[s], hi = seg_offsets[s + 1];
    if (lo == hi) continue;
    double mx = static_cast<double>(scores[lo]);
    for (std::size_t r = lo + 1; r < hi; ++r) {
      mx = std::max(mx, static_cast<double>(scores[r]));
    }
    double z = 0.0;
    for (std::size_t r = lo; r < hi; ++r) {
      z += std::exp(static_cast<double>(scores[r]) - mx);
    }
    for (std::size_t r = lo; r < hi; ++r) {
      out[r] = static_cast<T>(std::exp(static_cast<double>(scores[r]) - mx) / z);
    }
  }
}

template <typename T>
void gather_rows(const T* src, const uint32_t* idx, std::size_t n_idx, std::size_t d, T* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_idx); ++i) {
    const T* from = src + static_cast<std::size_t>(idx[i]) * d;
    T* to = out + i * d;
    for (std::size_t c = 0; c < d; ++c) to[c] = from[c];
  }
}

template <typename T>
void propagate(const uint64_t* offsets, const uint32_t* nbrs, std::size_t num_nodes, const T* x,
               std::size_t d, serial::PropagateMode mode, T* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(num_nodes); ++i) {
    const uint64_t lo = offsets[i], hi = offsets[i + 1];
    const double deg_i = static_cast<double>(hi - lo);
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (uint64_t e = lo; e < hi; ++e) {
        const std::size_t j = nbrs[e];
        const double x_jc = static_cast<double>(x[j * d + c]);
        switch (mode) {
          case serial::PropagateMode::kMean:
            acc += x_jc;
            break;
          case serial::PropagateMode::kMeanTranspose: {
            const double deg_j = static_cast<double>(offsets[j + 1] - offsets[j]);
            acc += x_jc / deg_j;
            break;
          }
          case serial::PropagateMode::kSymmetric: {
            const double deg_j = static_cast<double>(offsets[j + 1] - offsets[j]);
            acc += x_jc / std::sqrt(deg_i * deg_j);
            break;
          }
        }
      }
      if (mode == serial::PropagateMode::kMean && deg_i > 0.0) acc /= deg_i;
      out[i * d + c] = static_cast<T>(acc);
    }
  }
}

}  // namespace omp

using serial::PropagateMode;

template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_enabled() && m * k * n >= kParallelGrain) {
    omp::matmul(a, b, c, m, k, n);
  } else {
    serial::matmul(a, b, c, m, k, n);
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_enabled() && m * k * n >= kParallelGrain) {
    omp::matmul_tn(a, b, c, m, k, n);
  } else {
    serial::matmul_tn(a, b, c, m, k, n);
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  if (parallel_enabled() && m * k * n >= kParallelGrain) {
    omp::matmul_nt(a, b, c, m, n, k);
  } else {
    serial::matmul_nt(a, b, c, m, n, k);
  }
}

template <typename T>
void segment_sum(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                 std::size_t nrows, std::size_t d, T* out) {
  if (parallel_enabled() && nrows * d >= kParallelGrain) {
    omp::segment_sum(values, seg_offsets, num_segments, d, out);
  } else {
    serial::segment_sum(values, seg_offsets, num_segments, d, out);
  }
}

template <typename T>
void segment_mean(const T* values, const std::size_t* seg_offsets, std::size_t num_segments,
                  std::size_t nrows, std::size_t d, T* out) {
  if (parallel_enabled() && nrows * d >= kParallelGrain) {
    omp::segment_mean(values, seg_offsets, num_segments, d, out);
  } else {
    serial::segment_mean(values, seg_offsets, num_segments, d, out);
  }
}

template <typename T>
void segment_softmax(const T* scores, const std::size_t* seg_offsets, std::size_t num_segments,
                     std::size_t nrows, T* out) {
  if (parallel_enabled() && nrows >= kParallelGrain) {
    omp::segment_softmax(scores, seg_offsets, num_segments, out);
  } else {
    serial::segment_softmax(scores, seg_offsets, num_segments, out);
  }
}

template <typename T>
void gather_rows(const T* src, const uint32_t* idx, std::size_t n_idx, std::size_t d, T* out) {
  if (parallel_enabled() && n_idx * d >= kParallelGrain) {
    omp::gather_rows(src, idx, n_idx, d, out);
  } else {
    serial::gather_rows(src, idx, n_idx, d, out);
  }
}

template <typename T>
void scatter_add_rows(T* dst, const uint32_t* idx, std::size_t n_idx, std::size_t d,
                      const T* src) {
  serial::scatter_add_rows(dst, idx, n_idx, d, src);
}

template <typename T>
void propagate(const uint64_t* offsets, const uint32_t* nbrs, std::size_t num_nodes, const T* x,
               std::size_t d, PropagateMode mode, T* out) {
  if (parallel_enabled() && num_nodes * d >= kParallelGrain) {
    omp::propagate(offsets, nbrs, num_nodes, x, d, mode, out);
  } else {
    serial::propagate(offsets, nbrs, num_nodes, x, d, mode, out);
  }
}

template <typename T>
double reduce_sum(const T* x, std::size_t n) {
  return serial::reduce_sum(x, n);
}

// Elementwise map over independent outputs; f(i) writes element i.
template <typename F>
void parallel_for(std::size_t n, std::size_t work_per_item, F&& f) {
  if (parallel_enabled() && n * work_per_item >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      f(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

// Builds segment offsets (s+1 entries) from sorted non-decreasing segment
// ids; validates ordering.
std::vector<std::size_t> segment_offsets(const std::vector<uint32_t>& seg_ids,
                                         std::size_t num_segments);

}  // namespace copg::kernels

#endif  // COPG_KERNELS_HPP_
