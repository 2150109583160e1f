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

#include "rkiqt/ops/stems.hpp"

#include "rkiqt/ops/transformer.hpp"

#include <cmath>

namespace rkiqt::ops {

namespace {

Tensor he_conv(int out_c, int in_c, int k, Rng& rng) {
  Tensor w = Tensor::zeros({out_c, in_c, k, k}, true);
  const double std = std::sqrt(2.0 / double(in_c * k * k));
  for (auto& v : w.data()) v = rng.normal() * std;
  return w;
}

std::vector<int> stage_channels(const StemConfig& cfg) {
  std::vector<int> ch = {3};
  for (int w : cfg.widths) ch.push_back(w);
  ch.push_back(cfg.out_dim);
  return ch;
}

}  // namespace

ConvStemParams ConvStemParams::init(const StemConfig& cfg, Rng& rng) {
  ConvStemParams p;
  const auto ch = stage_channels(cfg);
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    p.w.push_back(he_conv(ch[i + 1], ch[i], 3, rng));
    if (i == 0) zero_dc(p.w.back());
    p.b.push_back(Tensor::zeros({ch[i + 1]}, true));
  }
  return p;
}

NamedParams ConvStemParams::named(const std::string& prefix) const {
  NamedParams out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".w", w[i]);
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".b", b[i]);
  }
  return out;
}

Tensor conv_stem(const Tensor& pixels, const StemConfig& cfg,
                 const ConvStemParams& params) {
  (void)cfg;
  Tensor h = pixels;
  for (std::size_t i = 0; i < params.w.size(); ++i)
    h = relu(conv2d(h, params.w[i], params.b[i], 2, 1));
  return spatial_mean(h);
}

InvStemParams InvStemParams::init(const StemConfig& cfg, Rng& rng) {
  InvStemParams p;
  const auto ch = stage_channels(cfg);
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    p.w.push_back(he_conv(ch[i + 1], ch[i], 1, rng));
    p.b.push_back(Tensor::zeros({ch[i + 1]}, true));
    InvolutionConfig ic;
    ic.kernel_size = cfg.involution_kernel;
    ic.stride = 2;
    ic.groups = 1;
    ic.reduction = 4;
    p.inv_cfg.push_back(ic);
    p.inv.push_back(InvolutionParams::init(ch[i + 1], ic, rng));
  }
  return p;
}

NamedParams InvStemParams::named(const std::string& prefix) const {
  NamedParams out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.emplace_back(prefix + ".proj" + std::to_string(i) + ".w", w[i]);
    out.emplace_back(prefix + ".proj" + std::to_string(i) + ".b", b[i]);
    const auto sub = inv[i].named(prefix + ".inv" + std::to_string(i));
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

Tensor inv_stem(const Tensor& pixels, const StemConfig& cfg,
                const InvStemParams& params) {
  (void)cfg;
  Tensor h = pixels;
  for (std::size_t i = 0; i < params.w.size(); ++i) {
    h = relu(conv2d(h, params.w[i], params.b[i], 1, 0));
    h = relu(involution(h, params.inv_cfg[i], params.inv[i]));
  }
  return spatial_mean(h);
}

}  // namespace rkiqt::ops
