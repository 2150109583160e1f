// Copyright (c) the RKIQT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rkiqt/core/rng.hpp"
#include "rkiqt/core/tensor.hpp"

namespace rkiqt::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0,
                            bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = rng.normal() * scale;
  return t;
}

// relative error with an absolute floor: coordinates whose gradients sit at
// the finite-difference noise level are compared absolutely
inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-5});
  return std::fabs(a - b) / denom;
}

// Central-difference check of d loss / d params against the tape.
// loss_fn must rebuild the graph from the current parameter values.
// Returns the worst relative error over `samples` coordinates per parameter.
inline double check_gradients(const std::function<Tensor()>& loss_fn,
                              std::vector<Tensor> params, int samples,
                              Rng& rng, double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);

  double worst = 0.0;
  for (auto& p : params) {
    const auto analytic = p.has_grad() ? p.grad() : std::vector<Scalar>(std::size_t(p.numel()), 0.0);
    const idx_t n = p.numel();
    const int take = std::min<idx_t>(samples, n);
    for (int s = 0; s < take; ++s) {
      const idx_t i = (n <= samples) ? s : rng.uniform_int(n);
      const double orig = p.data()[std::size_t(i)];
      p.data()[std::size_t(i)] = orig + eps;
      const double lp = loss_fn().item();
      p.data()[std::size_t(i)] = orig - eps;
      const double lm = loss_fn().item();
      p.data()[std::size_t(i)] = orig;
      const double numeric = (lp - lm) / (2.0 * eps);
      worst = std::max(worst, rel_err(analytic[std::size_t(i)], numeric));
    }
  }
  return worst;
}

}  // namespace rkiqt::testing
