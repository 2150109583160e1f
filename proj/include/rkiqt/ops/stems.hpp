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

// Strided feature stems that summarize a crop into one D-vector via global
// average pooling. Position embeddings are the caller's business.
struct StemConfig {
  std::vector<int> widths = {16, 32};  // intermediate channels, stride 2 each
  int out_dim = 64;                    // final stage, also stride 2
  int involution_kernel = 3;           // inv stem only
};

// conv3x3(s2) + ReLU chain, then GAP.
struct ConvStemParams {
  std::vector<Tensor> w, b;

  static ConvStemParams init(const StemConfig& cfg, Rng& rng);
  NamedParams named(const std::string& prefix) const;
};
Tensor conv_stem(const Tensor& pixels, const StemConfig& cfg,
                 const ConvStemParams& params);  // [B,3,H,W] -> [B,D]

// 1x1 conv (channel change) + ReLU + involution(s2) + ReLU chain, then GAP.
struct InvStemParams {
  std::vector<Tensor> w, b;               // 1x1 convs
  std::vector<InvolutionParams> inv;      // one per stage
  std::vector<InvolutionConfig> inv_cfg;  // stride-2 spatial mixing

  static InvStemParams init(const StemConfig& cfg, Rng& rng);
  NamedParams named(const std::string& prefix) const;
};
Tensor inv_stem(const Tensor& pixels, const StemConfig& cfg,
                const InvStemParams& params);  // [B,3,H,W] -> [B,D]

}  // namespace rkiqt::ops
