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

// Multi-head attention with fused qkv projection.
struct AttentionParams {
  Tensor wqkv, bqkv;  // [D, 3D], [3D]
  Tensor wo, bo;      // [D, D], [D]

  static AttentionParams init(int dim, Rng& rng);
  NamedParams named(const std::string& prefix) const;
};

// Pre-norm encoder block: x + MHSA(LN(x)), then x + MLP(LN(x)).
struct BlockParams {
  Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  AttentionParams attn;
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  static BlockParams init(int dim, double mlp_ratio, Rng& rng);
  NamedParams named(const std::string& prefix) const;
};

// Heads split of [B,T,D] -> [B*h, T, D/h] and back.
Tensor split_heads(const Tensor& x, int heads);
Tensor merge_heads(const Tensor& x, int heads);

// Scaled dot-product attention given projected q/k/v of [B,T,D].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

Tensor mhsa(const Tensor& x, const AttentionParams& p, int heads);
Tensor block_forward(const Tensor& x, const BlockParams& p, int heads);

// Truncated Gaussian init (sigma 0.02, cut at 2 sigma), the ViT convention.
Tensor trunc_normal(Shape shape, Rng& rng, double stddev = 0.02);

Tensor linear_init(int in_dim, int out_dim, Rng& rng);  // weights only

// Removes each (out,in) kernel plane's mean so the filter ignores local
// brightness; used on first layers that face raw pixels.
void zero_dc(Tensor& conv_weights);

}  // namespace rkiqt::ops
