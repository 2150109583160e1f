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

#include "rkiqt/ops/involution.hpp"

#include <cmath>

namespace rkiqt::ops {

namespace {

Tensor he_conv(int out_c, int in_c, int k, Rng& rng) {
  Tensor w = Tensor::zeros({out_c, in_c, k, k}, true);
  const double std = std::sqrt(2.0 / double(in_c * k * k));
  for (auto& v : w.data()) v = rng.normal() * std;
  return w;
}

int reduced_channels(int channels, int reduction) {
  return std::max(1, channels / std::max(1, reduction));
}

}  // namespace

InvolutionParams InvolutionParams::init(int channels,
                                        const InvolutionConfig& cfg, Rng& rng) {
  check(cfg.kernel_size % 2 == 1, Err::InvalidArgument,
        "involution kernel size must be odd");
  check(channels % cfg.groups == 0, Err::ShapeMismatch,
        "involution: channels not divisible by groups");
  const int cr = reduced_channels(channels, cfg.reduction);
  InvolutionParams p;
  p.w_reduce = he_conv(cr, channels, 1, rng);
  p.b_reduce = Tensor::zeros({cr}, true);
  p.w_expand =
      he_conv(cfg.groups * cfg.kernel_size * cfg.kernel_size, cr, 1, rng);
  p.b_expand =
      Tensor::zeros({cfg.groups * cfg.kernel_size * cfg.kernel_size}, true);
  return p;
}

NamedParams InvolutionParams::named(const std::string& prefix) const {
  return {{prefix + ".w_reduce", w_reduce},
          {prefix + ".b_reduce", b_reduce},
          {prefix + ".w_expand", w_expand},
          {prefix + ".b_expand", b_expand}};
}

Tensor involution_kernels(const Tensor& x, const InvolutionConfig& cfg,
                          const InvolutionParams& params) {
  check(x.ndim() == 4, Err::ShapeMismatch, "involution: expects [B,C,H,W]");
  const idx_t B = x.dim(0);
  const idx_t K = cfg.kernel_size;
  Tensor site = cfg.stride > 1 ? avg_pool(x, cfg.stride, cfg.stride) : x;
  Tensor hidden = relu(conv2d(site, params.w_reduce, params.b_reduce, 1, 0));
  Tensor flat = conv2d(hidden, params.w_expand, params.b_expand, 1, 0);
  // [B, G*K*K, Ho, Wo] -> [B, G, K*K, Ho, Wo]
  return reshape(flat, {B, cfg.groups, K * K, flat.dim(2), flat.dim(3)});
}

Tensor involution(const Tensor& x, const InvolutionConfig& cfg,
                  const InvolutionParams& params) {
  check(x.dim(1) % cfg.groups == 0, Err::ShapeMismatch,
        "involution: channels not divisible by groups");
  Tensor ker = involution_kernels(x, cfg, params);
  const idx_t pad = (cfg.kernel_size - 1) / 2;
  return involution_apply(x, ker, cfg.kernel_size, cfg.stride, pad, cfg.groups);
}

}  // namespace rkiqt::ops
