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

#include <vector>

#include "rkiqt/core/tensor.hpp"

namespace rkiqt::train {

// Adaptive moments with decoupled weight decay.
struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<Tensor> params, const AdamWConfig& cfg);

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

  void step();
  void zero_grad();
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<Scalar>> m_, v_;
  AdamWConfig cfg_;
  long t_ = 0;
};

// Scales gradients of all listed params so their joint L2 norm is at most
// max_norm. Returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_global_norm(const std::vector<Tensor>& params, double max_norm);

// Exact schedule: lr(epoch) = lr0 / decay_factor^(epoch / decay_every).
double scheduled_lr(double lr0, double decay_factor, int decay_every,
                    int epoch);

}  // namespace rkiqt::train
