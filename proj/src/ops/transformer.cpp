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

#include "rkiqt/ops/transformer.hpp"

#include <cmath>

namespace rkiqt::ops {

Tensor trunc_normal(Shape shape, Rng& rng, double stddev) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (auto& v : t.data())
    v = rng.truncated_normal(stddev, -2.0 * stddev, 2.0 * stddev);
  return t;
}

Tensor linear_init(int in_dim, int out_dim, Rng& rng) {
  Tensor w = Tensor::zeros({in_dim, out_dim}, true);
  for (auto& v : w.data()) v = rng.truncated_normal(0.02, -0.04, 0.04);
  return w;
}

void zero_dc(Tensor& conv_weights) {
  check(conv_weights.ndim() == 4, Err::ShapeMismatch, "zero_dc expects conv weights");
  const idx_t oc = conv_weights.dim(0), ic = conv_weights.dim(1),
              kk = conv_weights.dim(2) * conv_weights.dim(3);
  auto& d = conv_weights.data();
  for (idx_t o = 0; o < oc; ++o)
    for (idx_t i = 0; i < ic; ++i) {
      Scalar m = 0;
      for (idx_t k = 0; k < kk; ++k) m += d[std::size_t((o * ic + i) * kk + k)];
      m /= Scalar(kk);
      for (idx_t k = 0; k < kk; ++k) d[std::size_t((o * ic + i) * kk + k)] -= m;
    }
}

AttentionParams AttentionParams::init(int dim, Rng& rng) {
  AttentionParams p;
  p.wqkv = linear_init(dim, 3 * dim, rng);
  p.bqkv = Tensor::zeros({3 * dim}, true);
  p.wo = linear_init(dim, dim, rng);
  p.bo = Tensor::zeros({dim}, true);
  return p;
}

NamedParams AttentionParams::named(const std::string& prefix) const {
  return {{prefix + ".wqkv", wqkv},
          {prefix + ".bqkv", bqkv},
          {prefix + ".wo", wo},
          {prefix + ".bo", bo}};
}

BlockParams BlockParams::init(int dim, double mlp_ratio, Rng& rng) {
  BlockParams p;
  p.ln1_g = Tensor::full({dim}, 1.0);
  p.ln1_g.set_requires_grad(true);
  p.ln1_b = Tensor::zeros({dim}, true);
  p.ln2_g = Tensor::full({dim}, 1.0);
  p.ln2_g.set_requires_grad(true);
  p.ln2_b = Tensor::zeros({dim}, true);
  p.attn = AttentionParams::init(dim, rng);
  const int hidden = std::max(1, int(std::lround(mlp_ratio * dim)));
  p.mlp_w1 = linear_init(dim, hidden, rng);
  p.mlp_b1 = Tensor::zeros({hidden}, true);
  p.mlp_w2 = linear_init(hidden, dim, rng);
  p.mlp_b2 = Tensor::zeros({dim}, true);
  return p;
}

NamedParams BlockParams::named(const std::string& prefix) const {
  NamedParams out = {{prefix + ".ln1.g", ln1_g}, {prefix + ".ln1.b", ln1_b},
                     {prefix + ".ln2.g", ln2_g}, {prefix + ".ln2.b", ln2_b},
                     {prefix + ".mlp.w1", mlp_w1}, {prefix + ".mlp.b1", mlp_b1},
                     {prefix + ".mlp.w2", mlp_w2}, {prefix + ".mlp.b2", mlp_b2}};
  const auto a = attn.named(prefix + ".attn");
  out.insert(out.end(), a.begin(), a.end());
  return out;
}

namespace {

// one-copy layout transform [B, T, stride_cols] slice -> [B*h, T, dh]
Tensor gather_heads(const Tensor& x, int heads, idx_t col_off, idx_t width) {
  const idx_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
  check(width % heads == 0, Err::ShapeMismatch, "dim not divisible by heads");
  const idx_t dh = width / heads;
  Tensor out = Tensor::zeros({B * heads, T, dh});
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  for (idx_t b = 0; b < B; ++b)
    for (idx_t h = 0; h < heads; ++h)
      for (idx_t t = 0; t < T; ++t)
        std::copy(src + (b * T + t) * D + col_off + h * dh,
                  src + (b * T + t) * D + col_off + h * dh + dh,
                  dst + ((b * heads + h) * T + t) * dh);
  if (grad_enabled() && x.requires_grad()) {
    TensorNode* n = out.node().get();
    n->requires_grad = true;
    n->is_leaf = false;
    n->parents.push_back(x.node());
    n->backward_fn = [px = x.node().get(), B, T, D, heads, dh,
                      col_off](TensorNode& self) {
      if (!px->requires_grad) return;
      auto& g = px->ensure_grad();
      const Scalar* gs = self.grad.data();
      for (idx_t b = 0; b < B; ++b)
        for (idx_t h = 0; h < heads; ++h)
          for (idx_t t = 0; t < T; ++t) {
            Scalar* grow = g.data() + (b * T + t) * D + col_off + h * dh;
            const Scalar* srow = gs + ((b * heads + h) * T + t) * dh;
            for (idx_t d = 0; d < dh; ++d) grow[d] += srow[d];
          }
    };
  }
  return out;
}

}  // namespace

Tensor split_heads(const Tensor& x, int heads) {
  return gather_heads(x, heads, 0, x.dim(2));
}

Tensor merge_heads(const Tensor& x, int heads) {
  const idx_t Bh = x.dim(0), T = x.dim(1), dh = x.dim(2);
  const idx_t B = Bh / heads, D = dh * heads;
  Tensor out = Tensor::zeros({B, T, D});
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  for (idx_t b = 0; b < B; ++b)
    for (idx_t h = 0; h < heads; ++h)
      for (idx_t t = 0; t < T; ++t)
        std::copy(src + ((b * heads + h) * T + t) * dh,
                  src + ((b * heads + h) * T + t + 1) * dh,
                  dst + (b * T + t) * D + h * dh);
  if (grad_enabled() && x.requires_grad()) {
    TensorNode* n = out.node().get();
    n->requires_grad = true;
    n->is_leaf = false;
    n->parents.push_back(x.node());
    n->backward_fn = [px = x.node().get(), B, T, D, heads, dh](TensorNode& self) {
      if (!px->requires_grad) return;
      auto& g = px->ensure_grad();
      const Scalar* gs = self.grad.data();
      for (idx_t b = 0; b < B; ++b)
        for (idx_t h = 0; h < heads; ++h)
          for (idx_t t = 0; t < T; ++t) {
            Scalar* grow = g.data() + ((b * heads + h) * T + t) * dh;
            const Scalar* srow = gs + (b * T + t) * D + h * dh;
            for (idx_t d = 0; d < dh; ++d) grow[d] += srow[d];
          }
    };
  }
  return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
  const idx_t D = q.dim(2);
  const double inv_sqrt = 1.0 / std::sqrt(double(D / heads));
  Tensor qh = split_heads(q, heads);
  Tensor kh = split_heads(k, heads);
  Tensor vh = split_heads(v, heads);
  Tensor scores = scale(bmm(qh, kh, /*trans_b=*/true), inv_sqrt);
  Tensor probs = softmax_last(scores);
  Tensor out = bmm(probs, vh);
  return merge_heads(out, heads);
}

Tensor mhsa(const Tensor& x, const AttentionParams& p, int heads) {
  const idx_t D = x.dim(2);
  const double inv_sqrt = 1.0 / std::sqrt(double(D / heads));
  Tensor qkv = linear(x, p.wqkv, p.bqkv);
  Tensor qh = gather_heads(qkv, heads, 0, D);
  Tensor kh = gather_heads(qkv, heads, D, D);
  Tensor vh = gather_heads(qkv, heads, 2 * D, D);
  Tensor probs = softmax_last(scale(bmm(qh, kh, /*trans_b=*/true), inv_sqrt));
  Tensor out = merge_heads(bmm(probs, vh), heads);
  return linear(out, p.wo, p.bo);
}

Tensor block_forward(const Tensor& x, const BlockParams& p, int heads) {
  Tensor h = add(x, mhsa(layernorm(x, p.ln1_g, p.ln1_b), p.attn, heads));
  Tensor m = linear(gelu(linear(layernorm(h, p.ln2_g, p.ln2_b), p.mlp_w1,
                                p.mlp_b1)),
                    p.mlp_w2, p.mlp_b2);
  return add(h, m);
}

}  // namespace rkiqt::ops
