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

#include "rkiqt/ops/involution.hpp"

namespace rkiqt::ops {

// Per-token projection from student width to teacher width.
struct AlignParams {
  Tensor w;  // [Din, Dout]
  Tensor b;  // [Dout]

  static AlignParams init(int din, int dout, Rng& rng);
  static AlignParams identity(int dim);
  NamedParams named(const std::string& prefix) const;
};
Tensor align(const Tensor& tokens, const AlignParams& params);

// Feature regeneration head: 3x3 conv -> ReLU -> 3x3 conv, width preserved,
// same padding.
struct GenerateParams {
  Tensor w1, b1, w2, b2;

  static GenerateParams init(int channels, Rng& rng);
  NamedParams named(const std::string& prefix) const;
};
Tensor generate(const Tensor& grid, const GenerateParams& params);

// [B, g*g, D] token sequence -> [B, D, g, g] spatial grid (and back).
Tensor tokens_to_grid(const Tensor& tokens);
Tensor grid_to_tokens(const Tensor& grid);

}  // namespace rkiqt::ops
