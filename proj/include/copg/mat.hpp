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

#ifndef COPG_MAT_HPP_
#define COPG_MAT_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "copg/errors.hpp"

namespace copg {

// Dense row-major matrix. Value semantics; a 1x1 matrix doubles as a scalar.
template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols, T(0)); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  T* data() { return d_.data(); }
  const T* data() const { return d_.data(); }

  T& operator()(std::size_t r, std::size_t c) { return d_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return d_[r * cols_ + c]; }

  T& operator[](std::size_t i) { return d_[i]; }
  const T& operator[](std::size_t i) const { return d_[i]; }

  T* row(std::size_t r) { return d_.data() + r * cols_; }
  const T* row(std::size_t r) const { return d_.data() + r * cols_; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (const T& v : d_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  void fill(T v) {
    for (T& x : d_) x = v;
  }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows_, cols_);
    for (std::size_t i = 0; i < d_.size(); ++i) out[i] = static_cast<U>(d_[i]);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> d_;
};

using Matf = Mat<float>;
using Matd = Mat<double>;

template <typename T>
inline void check_same_shape(const Mat<T>& a, const Mat<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace copg

#endif  // COPG_MAT_HPP_
