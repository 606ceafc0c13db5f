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

#ifndef COPG_OPTIM_HPP_
#define COPG_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "copg/autodiff.hpp"
#include "copg/errors.hpp"
#include "copg/mat.hpp"

namespace copg::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2: grad += wd * param before the update
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p->value.rows(), p->value.cols());
      v_.emplace_back(p->value.rows(), p->value.cols());
    }
  }

  // One update over all parameters. Any non-finite gradient aborts the whole
  // step before mutating state. Gradients are zeroed afterwards.
  void step() {
    for (const auto& p : params_) {
      p->ensure_grad();
      if (!p->grad.all_finite()) {
        throw NonFiniteGradient(p->name.empty() ? "<unnamed>" : p->name);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& p = *params_[pi];
      const double wd = p.apply_weight_decay ? cfg_.weight_decay : 0.0;
      Mat<T>& m = m_[pi];
      Mat<T>& v = v_[pi];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = static_cast<double>(p.grad[i]) + wd * static_cast<double>(p.value[i]);
        const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * g;
        const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double m_hat = mi / bc1;
        const double v_hat = vi / bc2;
        p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) -
                                    cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
      }
      p.grad.fill(T(0));
    }
  }

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  uint64_t step_count() const { return t_; }
  void set_step_count(uint64_t t) { t_ = t; }

  const std::vector<Tensor<T>>& params() const { return params_; }
  std::vector<Mat<T>>& first_moments() { return m_; }
  std::vector<Mat<T>>& second_moments() { return v_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamConfig cfg_;
  std::vector<Mat<T>> m_, v_;
  uint64_t t_ = 0;
};

struct LrSchedule {
  enum class Kind { kConstant, kMultiStep, kCosine };

  Kind kind = Kind::kConstant;
  double base = 1e-3;
  std::vector<int> milestones;  // multistep
  double gamma = 0.1;           // multistep decay factor
  int t_max = 100;              // cosine period
  double lr_min = 1e-6;         // cosine floor

  double lr_at(int epoch) const {
    switch (kind) {
      case Kind::kConstant:
        return base;
      case Kind::kMultiStep: {
        double lr = base;
        for (int m : milestones) {
          if (epoch >= m) lr *= gamma;
        }
        return lr;
      }
      case Kind::kCosine: {
        const double e = std::min<double>(epoch, t_max);
        return lr_min + (base - lr_min) *
                            (1.0 + std::cos(3.14159265358979323846 * e / t_max)) / 2.0;
      }
    }
    return base;
  }

  static LrSchedule constant(double base) { return {Kind::kConstant, base, {}, 0.1, 100, 1e-6}; }
  static LrSchedule multistep(double base, std::vector<int> milestones, double gamma) {
    return {Kind::kMultiStep, base, std::move(milestones), gamma, 100, 1e-6};
  }
  static LrSchedule cosine(double base, int t_max, double lr_min) {
    return {Kind::kCosine, base, {}, 0.1, t_max, lr_min};
  }
};

}  // namespace copg::ad

#endif  // COPG_OPTIM_HPP_
