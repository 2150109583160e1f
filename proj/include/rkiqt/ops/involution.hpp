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

#include <string>
#include <utility>
#include <vector>

#include "rkiqt/core/rng.hpp"
#include "rkiqt/core/tensor.hpp"

namespace rkiqt::ops {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

struct InvolutionConfig {
  int kernel_size = 3;
  int stride = 1;
  int groups = 1;
  int reduction = 4;  // channel reduction inside the kernel-generation branch
};

// Two-layer kernel-generation branch: 1x1 reduce -> ReLU -> 1x1 expand to
// groups * K^2 per site. The generated kernel is shared across the channels
// of a group.
struct InvolutionParams {
  Tensor w_reduce, b_reduce;  // [C/r, C, 1, 1]
  Tensor w_expand, b_expand;  // [G*K*K, C/r, 1, 1]

  static InvolutionParams init(int channels, const InvolutionConfig& cfg,
                               Rng& rng);
  NamedParams named(const std::string& prefix) const;
};

// x: [B,C,H,W] -> [B,C,H/stride,W/stride], same padding.
// stride > 1 pools the kernel-generation input by the stride first.
Tensor involution(const Tensor& x, const InvolutionConfig& cfg,
                  const InvolutionParams& params);

// The per-site kernels [B, G, K*K, Ho, Wo] (exposed for tests/diagnostics).
Tensor involution_kernels(const Tensor& x, const InvolutionConfig& cfg,
                          const InvolutionParams& params);

}  // namespace rkiqt::ops
