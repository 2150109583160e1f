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

#include "rkiqt/ops/mcd_modules.hpp"

#include <cmath>

namespace rkiqt::ops {

AlignParams AlignParams::init(int din, int dout, Rng& rng) {
  AlignParams p;
  p.w = Tensor::zeros({din, dout}, true);
  const double std = std::sqrt(2.0 / double(din + dout));
  for (auto& v : p.w.data()) v = rng.normal() * std;
  p.b = Tensor::zeros({dout}, true);
  return p;
}

AlignParams AlignParams::identity(int dim) {
  AlignParams p;
  p.w = Tensor::zeros({dim, dim}, true);
  for (int i = 0; i < dim; ++i) p.w.data()[std::size_t(i) * dim + i] = 1.0;
  p.b = Tensor::zeros({dim}, true);
  return p;
}

NamedParams AlignParams::named(const std::string& prefix) const {
  return {{prefix + ".w", w}, {prefix + ".b", b}};
}

Tensor align(const Tensor& tokens, const AlignParams& params) {
  return linear(tokens, params.w, params.b);
}

GenerateParams GenerateParams::init(int channels, Rng& rng) {
  GenerateParams p;
  const double std = std::sqrt(2.0 / double(channels * 9));
  p.w1 = Tensor::zeros({channels, channels, 3, 3}, true);
  for (auto& v : p.w1.data()) v = rng.normal() * std;
  p.b1 = Tensor::zeros({channels}, true);
  p.w2 = Tensor::zeros({channels, channels, 3, 3}, true);
  for (auto& v : p.w2.data()) v = rng.normal() * std;
  p.b2 = Tensor::zeros({channels}, true);
  return p;
}

NamedParams GenerateParams::named(const std::string& prefix) const {
  return {{prefix + ".w1", w1},
          {prefix + ".b1", b1},
          {prefix + ".w2", w2},
          {prefix + ".b2", b2}};
}

Tensor generate(const Tensor& grid, const GenerateParams& params) {
  Tensor h = relu(conv2d(grid, params.w1, params.b1, 1, 1));
  return conv2d(h, params.w2, params.b2, 1, 1);
}

Tensor tokens_to_grid(const Tensor& tokens) {
  check(tokens.ndim() == 3, Err::ShapeMismatch,
        "tokens_to_grid: expects [B,T,D]");
  const idx_t B = tokens.dim(0), T = tokens.dim(1), D = tokens.dim(2);
  const idx_t g = idx_t(std::llround(std::sqrt(double(T))));
  check(g * g == T, Err::ShapeMismatch,
        "tokens_to_grid: token count " + std::to_string(T) + " is not square");
  return reshape(permute(tokens, {0, 2, 1}), {B, D, g, g});
}

Tensor grid_to_tokens(const Tensor& grid) {
  check(grid.ndim() == 4, Err::ShapeMismatch, "grid_to_tokens: expects [B,D,g,g]");
  const idx_t B = grid.dim(0), D = grid.dim(1), T = grid.dim(2) * grid.dim(3);
  return permute(reshape(grid, {B, D, T}), {0, 2, 1});
}

}  // namespace rkiqt::ops
