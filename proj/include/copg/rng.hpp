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

#ifndef COPG_RNG_HPP_
#define COPG_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>

// Self-contained deterministic RNG. Standard-library distributions are
// implementation-defined, so every draw here is spelled out explicitly and
// reproduces bit-for-bit across platforms and thread counts.
namespace copg::rng {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed plus stream tags
// (epoch, batch, node id, op id, ...).
inline uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t h = splitmix64(seed);
  for (uint64_t t : tags) h = splitmix64(h ^ (t + 0x9e3779b97f4a7c15ULL));
  return h;
}

inline uint64_t derive(uint64_t seed, uint64_t a) { return derive(seed, {a}); }
inline uint64_t derive(uint64_t seed, uint64_t a, uint64_t b) { return derive(seed, {a, b}); }
inline uint64_t derive(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return derive(seed, {a, b, c});
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0xd6e8feb86659fd93ULL)) {}

  uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  // Unbiased bounded draw in [0, n) via 128-bit multiply with rejection.
  uint64_t bounded(uint64_t n) {
    if (n <= 1) return 0;
    while (true) {
      uint64_t x = next_u64();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      uint64_t lo = static_cast<uint64_t>(m);
      if (lo >= n || lo >= static_cast<uint64_t>(-static_cast<int64_t>(n)) % n) {
        return static_cast<uint64_t>(m >> 64);
      }
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Draws two uniforms per call so the
  // stream position never depends on earlier call parity.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Partial Fisher-Yates shuffle of the first `take` slots.
  template <typename Vec>
  void partial_shuffle(Vec& v, std::size_t take) {
    const std::size_t n = v.size();
    if (take > n) take = n;
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
      std::swap(v[i], v[j]);
    }
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    partial_shuffle(v, v.size());
  }

 private:
  uint64_t state_;
};

// Stateless per-element uniform in [0, 1), used for dropout masks so the
// result is independent of evaluation order.
inline double element_uniform01(uint64_t key, uint64_t index) {
  return static_cast<double>(splitmix64(key ^ splitmix64(index + 1)) >> 11) * 0x1.0p-53;
}

}  // namespace copg::rng

#endif  // COPG_RNG_HPP_
