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

#ifndef COPG_AUTODIFF_HPP_
#define COPG_AUTODIFF_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "copg/errors.hpp"
#include "copg/kernels.hpp"
#include "copg/mat.hpp"
#include "copg/rng.hpp"

// Reverse-mode automatic differentiation over dense matrices, plus the
// segment ops message-passing layers need. Values are stored at precision T
// (float in production, double for tight gradient checks); reductions always
// accumulate in double.
namespace copg::ad {

// Stream key for dropout masks: the mask depends only on (seed, epoch,
// batch, op_id) and the element index, never on evaluation order.
struct DropKey {
  uint64_t seed = 0;
  uint64_t epoch = 0;
  uint64_t batch = 0;
  uint64_t op_id = 0;

  uint64_t hash() const { return rng::derive(seed, epoch, batch, op_id); }
};

template <typename T>
class Node;

template <typename T>
using Tensor = std::shared_ptr<Node<T>>;

template <typename T>
class Node {
 public:
  Mat<T> value;
  Mat<T> grad;  // allocated on first use
  bool requires_grad = false;
  bool apply_weight_decay = true;  // optimizer hint, meaningful on parameters
  std::string name;

  std::vector<Tensor<T>> parents;
  std::function<void(Node<T>&)> backprop;

  bool is_leaf() const { return parents.empty(); }

  void ensure_grad() {
    if (!grad.same_shape(value)) grad = Mat<T>::zeros(value.rows(), value.cols());
  }
};

template <typename T>
Tensor<T> constant(Mat<T> v) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(v);
  return n;
}

template <typename T>
Tensor<T> leaf(Mat<T> v, bool requires_grad = true) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
Tensor<T> parameter(Mat<T> v, std::string name, bool weight_decay = true) {
  auto n = leaf<T>(std::move(v), true);
  n->name = std::move(name);
  n->apply_weight_decay = weight_decay;
  return n;
}

namespace detail {

template <typename T>
Tensor<T> make_op(Mat<T> value, std::vector<Tensor<T>> parents,
                  std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// ---- core ops -------------------------------------------------------------

template <typename T>
Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
  if (a->value.cols() != b->value.rows()) {
    throw ShapeMismatch("matmul: " + std::to_string(a->value.rows()) + "x" +
                        std::to_string(a->value.cols()) + " * " + std::to_string(b->value.rows()) +
                        "x" + std::to_string(b->value.cols()));
  }
  const std::size_t m = a->value.rows(), k = a->value.cols(), n = b->value.cols();
  Mat<T> out(m, n);
  kernels::matmul(a->value.data(), b->value.data(), out.data(), m, k, n);
  return detail::make_op<T>(
      std::move(out), {a, b}, [a, b, m, k, n](Node<T>& self) {
        if (a->requires_grad) {
          a->ensure_grad();
          Mat<T> ga(m, k);
          kernels::matmul_nt(self.grad.data(), b->value.data(), ga.data(), m, n, k);
          for (std::size_t i = 0; i < ga.size(); ++i) a->grad[i] += ga[i];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          Mat<T> gb(k, n);
          kernels::matmul_tn(a->value.data(), self.grad.data(), gb.data(), m, k, n);
          for (std::size_t i = 0; i < gb.size(); ++i) b->grad[i] += gb[i];
        }
      });
}

// Same-shape addition, or broadcast when b is 1 x n (row bias) or 1 x 1.
template <typename T>
Tensor<T> add(Tensor<T> a, Tensor<T> b) {
  const bool same = a->value.same_shape(b->value);
  const bool row_bcast = b->value.rows() == 1 && b->value.cols() == a->value.cols();
  const bool scalar = b->value.size() == 1;
  if (!same && !row_bcast && !scalar) throw ShapeMismatch("add");
  Mat<T> out = a->value;
  const std::size_t rows = out.rows(), cols = out.cols();
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  } else if (row_bcast) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out(r, c) += b->value[c];
    }
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[0];
  }
  return detail::make_op<T>(std::move(out), {a, b}, [a, b, same, row_bcast](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      if (same) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
      } else if (row_bcast) {
        for (std::size_t r = 0; r < self.grad.rows(); ++r) {
          for (std::size_t c = 0; c < self.grad.cols(); ++c) {
            b->grad[c] += self.grad(r, c);
          }
        }
      } else {
        double acc = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          acc += static_cast<double>(self.grad[i]);
        }
        b->grad[0] += static_cast<T>(acc);
      }
    }
  });
}

// Elementwise (Hadamard) product.
template <typename T>
Tensor<T> mul(Tensor<T> a, Tensor<T> b) {
  check_same_shape(a->value, b->value, "mul");
  Mat<T> out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return detail::make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        a->grad[i] += self.grad[i] * b->value[i];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        b->grad[i] += self.grad[i] * a->value[i];
      }
    }
  });
}

// Rows of a scaled by the column vector s (m x 1).
template <typename T>
Tensor<T> scale_rows(Tensor<T> a, Tensor<T> s) {
  if (s->value.cols() != 1 || s->value.rows() != a->value.rows()) {
    throw ShapeMismatch("scale_rows: scale must be rows x 1");
  }
  Mat<T> out = a->value;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const T f = s->value[r];
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= f;
  }
  return detail::make_op<T>(std::move(out), {a, s}, [a, s](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t r = 0; r < self.grad.rows(); ++r) {
        const T f = s->value[r];
        for (std::size_t c = 0; c < self.grad.cols(); ++c) {
          a->grad(r, c) += self.grad(r, c) * f;
        }
      }
    }
    if (s->requires_grad) {
      s->ensure_grad();
      for (std::size_t r = 0; r < self.grad.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < self.grad.cols(); ++c) {
          acc += static_cast<double>(self.grad(r, c)) * static_cast<double>(a->value(r, c));
        }
        s->grad[r] += static_cast<T>(acc);
      }
    }
  });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
  const std::size_t rows = parts[0]->value.rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw ShapeMismatch("concat_cols: row mismatch");
    cols += p->value.cols();
  }
  Mat<T> out(rows, cols);
  std::size_t at = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < p->value.cols(); ++c) out(r, at + c) = p->value(r, c);
    }
    at += p->value.cols();
  }
  return detail::make_op<T>(std::move(out), parts, [parts](Node<T>& self) {
    std::size_t at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (std::size_t r = 0; r < self.grad.rows(); ++r) {
          for (std::size_t c = 0; c < p->value.cols(); ++c) {
            p->grad(r, c) += self.grad(r, at + c);
          }
        }
      }
      at += p->value.cols();
    }
  });
}

template <typename T>
Tensor<T> concat_cols(Tensor<T> a, Tensor<T> b) {
  return concat_cols<T>(std::vector<Tensor<T>>{a, b});
}

template <typename T>
Tensor<T> row_gather(Tensor<T> a, std::vector<uint32_t> indices) {
  for (uint32_t i : indices) {
    if (i >= a->value.rows()) throw ShapeMismatch("row_gather: index out of range");
  }
  const std::size_t d = a->value.cols();
  Mat<T> out(indices.size(), d);
  kernels::gather_rows(a->value.data(), indices.data(), indices.size(), d, out.data());
  return detail::make_op<T>(std::move(out), {a},
                            [a, idx = std::move(indices), d](Node<T>& self) {
                              if (!a->requires_grad) return;
                              a->ensure_grad();
                              kernels::scatter_add_rows(a->grad.data(), idx.data(), idx.size(), d,
                                                        self.grad.data());
                            });
}

namespace detail {

template <typename T, typename FwdF, typename DerivF>
Tensor<T> pointwise(Tensor<T> a, FwdF f, DerivF df) {
  Mat<T> out(a->value.rows(), a->value.cols());
  kernels::parallel_for(out.size(), 4, [&](std::size_t i) {
    out[i] = static_cast<T>(f(static_cast<double>(a->value[i])));
  });
  return make_op<T>(std::move(out), {a}, [a, df](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double x = static_cast<double>(a->value[i]);
      const double y = static_cast<double>(self.value[i]);
      a->grad[i] += static_cast<T>(static_cast<double>(self.grad[i]) * df(x, y));
    }
  });
}

}  // namespace detail

template <typename T>
Tensor<T> relu(Tensor<T> a) {
  return detail::pointwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

template <typename T>
Tensor<T> elu(Tensor<T> a) {
  return detail::pointwise(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : std::exp(x); });
}

template <typename T>
Tensor<T> leaky_relu(Tensor<T> a, double slope) {
  return detail::pointwise(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

template <typename T>
Tensor<T> sigmoid(Tensor<T> a) {
  return detail::pointwise(
      a, [](double x) { return detail::sigmoid_stable(x); },
      [](double, double y) { return y * (1.0 - y); });
}

// Multiplication by a compile-time-known constant.
template <typename T>
Tensor<T> scale(Tensor<T> a, double c) {
  return detail::pointwise(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

// Inverted dropout: kept activations scale by 1/(1-p) in train mode;
// identity in eval mode or at p = 0.
template <typename T>
Tensor<T> dropout(Tensor<T> a, double p, bool train_mode, const DropKey& key) {
  if (!train_mode || p <= 0.0) return a;
  if (p >= 1.0) throw ContractError("dropout probability must be < 1");
  const uint64_t h = key.hash();
  const double keep_scale = 1.0 / (1.0 - p);
  Mat<T> out(a->value.rows(), a->value.cols());
  auto mask = std::make_shared<std::vector<uint8_t>>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool keep = rng::element_uniform01(h, i) >= p;
    (*mask)[i] = keep;
    out[i] = keep ? static_cast<T>(static_cast<double>(a->value[i]) * keep_scale) : T(0);
  }
  return detail::make_op<T>(std::move(out), {a}, [a, mask, keep_scale](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if ((*mask)[i]) {
        a->grad[i] += static_cast<T>(static_cast<double>(self.grad[i]) * keep_scale);
      }
    }
  });
}

// ---- segment ops ------------------------------------------------------------
// segment_ids must be sorted non-decreasing; empty segments produce zero
// rows (sum/mean) or an empty softmax slice.

template <typename T>
Tensor<T> segment_sum(Tensor<T> values, const std::vector<uint32_t>& segment_ids,
                      std::size_t num_segments) {
  if (segment_ids.size() != values->value.rows()) {
    throw ShapeMismatch("segment_sum: one segment id per row");
  }
  auto offsets =
      std::make_shared<std::vector<std::size_t>>(kernels::segment_offsets(segment_ids, num_segments));
  const std::size_t d = values->value.cols();
  Mat<T> out(num_segments, d);
  kernels::segment_sum(values->value.data(), offsets->data(), num_segments,
                       values->value.rows(), d, out.data());
  auto ids = std::make_shared<std::vector<uint32_t>>(segment_ids);
  return detail::make_op<T>(std::move(out), {values}, [values, ids, d](Node<T>& self) {
    if (!values->requires_grad) return;
    values->ensure_grad();
    for (std::size_t r = 0; r < ids->size(); ++r) {
      const std::size_t s = (*ids)[r];
      for (std::size_t c = 0; c < d; ++c) values->grad(r, c) += self.grad(s, c);
    }
  });
}

template <typename T>
Tensor<T> segment_mean(Tensor<T> values, const std::vector<uint32_t>& segment_ids,
                       std::size_t num_segments) {
  if (segment_ids.size() != values->value.rows()) {
    throw ShapeMismatch("segment_mean: one segment id per row");
  }
  auto offsets =
      std::make_shared<std::vector<std::size_t>>(kernels::segment_offsets(segment_ids, num_segments));
  const std::size_t d = values->value.cols();
  Mat<T> out(num_segments, d);
  kernels::segment_mean(values->value.data(), offsets->data(), num_segments,
                        values->value.rows(), d, out.data());
  auto ids = std::make_shared<std::vector<uint32_t>>(segment_ids);
  return detail::make_op<T>(
      std::move(out), {values}, [values, ids, offsets, d](Node<T>& self) {
        if (!values->requires_grad) return;
        values->ensure_grad();
        for (std::size_t r = 0; r < ids->size(); ++r) {
          const std::size_t s = (*ids)[r];
          const auto cnt = static_cast<double>((*offsets)[s + 1] - (*offsets)[s]);
          for (std::size_t c = 0; c < d; ++c) {
            values->grad(r, c) += static_cast<T>(static_cast<double>(self.grad(s, c)) / cnt);
          }
        }
      });
}

template <typename T>
Tensor<T> segment_softmax(Tensor<T> scores, const std::vector<uint32_t>& segment_ids,
                          std::size_t num_segments) {
  if (scores->value.cols() != 1) throw ShapeMismatch("segment_softmax: scores must be m x 1");
  if (segment_ids.size() != scores->value.rows()) {
    throw ShapeMismatch("segment_softmax: one segment id per row");
  }
  auto offsets =
      std::make_shared<std::vector<std::size_t>>(kernels::segment_offsets(segment_ids, num_segments));
  Mat<T> out(scores->value.rows(), 1);
  kernels::segment_softmax(scores->value.data(), offsets->data(), num_segments,
                           scores->value.rows(), out.data());
  return detail::make_op<T>(
      std::move(out), {scores}, [scores, offsets, num_segments](Node<T>& self) {
        if (!scores->requires_grad) return;
        scores->ensure_grad();
        for (std::size_t s = 0; s < num_segments; ++s) {
          const std::size_t lo = (*offsets)[s], hi = (*offsets)[s + 1];
          double dot = 0.0;
          for (std::size_t r = lo; r < hi; ++r) {
            dot += static_cast<double>(self.value[r]) * static_cast<double>(self.grad[r]);
          }
          for (std::size_t r = lo; r < hi; ++r) {
            const double alpha = static_cast<double>(self.value[r]);
            scores->grad[r] +=
                static_cast<T>(alpha * (static_cast<double>(self.grad[r]) - dot));
          }
        }
      });
}

// Per-row dot product of two equal-shape matrices -> m x 1.
template <typename T>
Tensor<T> rowwise_dot(Tensor<T> a, Tensor<T> b) {
  check_same_shape(a->value, b->value, "rowwise_dot");
  const std::size_t m = a->value.rows(), d = a->value.cols();
  Mat<T> out(m, 1);
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      acc += static_cast<double>(a->value(r, c)) * static_cast<double>(b->value(r, c));
    }
    out[r] = static_cast<T>(acc);
  }
  return detail::make_op<T>(std::move(out), {a, b}, [a, b, d](Node<T>& self) {
    for (std::size_t r = 0; r < self.grad.rows(); ++r) {
      const T g = self.grad[r];
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t c = 0; c < d; ++c) a->grad(r, c) += g * b->value(r, c);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t c = 0; c < d; ++c) b->grad(r, c) += g * a->value(r, c);
      }
    }
  });
}

template <typename T>
Tensor<T> sum_all(Tensor<T> a) {
  Mat<T> out(1, 1);
  out[0] = static_cast<T>(kernels::reduce_sum(a->value.data(), a->value.size()));
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    const T g = self.grad[0];
    for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  });
}

template <typename T>
Tensor<T> mean_all(Tensor<T> a) {
  const auto n = static_cast<double>(a->value.size());
  Mat<T> out(1, 1);
  out[0] = static_cast<T>(kernels::reduce_sum(a->value.data(), a->value.size()) / n);
  return detail::make_op<T>(std::move(out), {a}, [a, n](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    const double g = static_cast<double>(self.grad[0]) / n;
    for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += static_cast<T>(g);
  });
}

// ---- losses -----------------------------------------------------------------

// Mean over the batch of
//   -[pos_weight * y * log sigmoid(z) + (1-y) * log(1 - sigmoid(z))]
// in log-sum-exp form; labels are a plain 0/1 matrix.
template <typename T>
Tensor<T> bce_with_logits(Tensor<T> logits, const Mat<T>& labels, double pos_weight) {
  check_same_shape(logits->value, labels, "bce_with_logits");
  const std::size_t n = logits->value.size();
  if (n == 0) throw ShapeMismatch("bce_with_logits: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = static_cast<double>(logits->value[i]);
    const double y = static_cast<double>(labels[i]);
    acc += pos_weight * y * detail::softplus(-z) + (1.0 - y) * detail::softplus(z);
  }
  Mat<T> out(1, 1);
  out[0] = static_cast<T>(acc / static_cast<double>(n));
  auto lab = std::make_shared<Mat<T>>(labels);
  return detail::make_op<T>(std::move(out), {logits}, [logits, lab, pos_weight, n](Node<T>& self) {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const double g = static_cast<double>(self.grad[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = static_cast<double>(logits->value[i]);
      const double y = static_cast<double>((*lab)[i]);
      const double p = detail::sigmoid_stable(z);
      logits->grad[i] += static_cast<T>(g * (-pos_weight * y * (1.0 - p) + (1.0 - y) * p));
    }
  });
}

// Mean of -alpha_y * (1 - p_y)^gamma * log p_y with p_y the probability of
// the true class and alpha_y = pos_weight for positives, 1 otherwise.
template <typename T>
Tensor<T> focal_loss(Tensor<T> logits, const Mat<T>& labels, double gamma, double pos_weight) {
  check_same_shape(logits->value, labels, "focal_loss");
  if (gamma < 0.0) throw ContractError("focal gamma must be >= 0");
  const std::size_t n = logits->value.size();
  if (n == 0) throw ShapeMismatch("focal_loss: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = static_cast<double>(logits->value[i]);
    const bool y = static_cast<double>(labels[i]) > 0.5;
    const double t = y ? z : -z;
    const double alpha = y ? pos_weight : 1.0;
    const double log_p = -detail::softplus(-t);       // log sigmoid(t)
    const double one_minus_p = detail::sigmoid_stable(-t);
    acc += -alpha * std::pow(one_minus_p, gamma) * log_p;
  }
  Mat<T> out(1, 1);
  out[0] = static_cast<T>(acc / static_cast<double>(n));
  auto lab = std::make_shared<Mat<T>>(labels);
  return detail::make_op<T>(
      std::move(out), {logits}, [logits, lab, gamma, pos_weight, n](Node<T>& self) {
        if (!logits->requires_grad) return;
        logits->ensure_grad();
        const double g = static_cast<double>(self.grad[0]) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double z = static_cast<double>(logits->value[i]);
          const bool y = static_cast<double>((*lab)[i]) > 0.5;
          const double t = y ? z : -z;
          const double alpha = y ? pos_weight : 1.0;
          const double p = detail::sigmoid_stable(t);
          const double q = 1.0 - p;
          const double log_p = -detail::softplus(-t);
          // d/dt of -alpha * q^gamma * log p
          const double dt =
              alpha * gamma * std::pow(q, gamma) * p * log_p - alpha * std::pow(q, gamma + 1.0);
          logits->grad[i] += static_cast<T>(g * (y ? dt : -dt));
        }
      });
}

// ---- backward ---------------------------------------------------------------

template <typename T>
std::vector<Node<T>*> topo_order(const Tensor<T>& root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  struct Frame {
    Node<T>* n;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  if (seen.insert(root.get()).second) stack.push_back({root.get()});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node<T>* p = f.n->parents[f.next++].get();
      if (seen.insert(p).second) stack.push_back({p});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

// Reverse accumulation from a scalar loss. Leaf gradients accumulate across
// calls; interior gradients are reset per call.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss->value.rows() != 1 || loss->value.cols() != 1) {
    throw NonScalarLoss(std::to_string(loss->value.rows()) + "x" +
                        std::to_string(loss->value.cols()));
  }
  auto order = topo_order(loss);
  for (Node<T>* n : order) {
    if (!n->is_leaf()) {
      n->ensure_grad();
      n->grad.fill(T(0));
    }
  }
  loss->ensure_grad();
  loss->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->requires_grad && n->backprop) n->backprop(*n);
  }
}

template <typename T>
void zero_grad(const std::vector<Tensor<T>>& params) {
  for (const auto& p : params) {
    p->ensure_grad();
    p->grad.fill(T(0));
  }
}

}  // namespace copg::ad

#endif  // COPG_AUTODIFF_HPP_
