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

// Dense and structured operators: matrix products, convolution (im2col),
// involution application, pooling, token masking.

#include <algorithm>
#include <memory>

#include "rkiqt/core/kernels.hpp"
#include "rkiqt/core/tensor.hpp"
#include "rkiqt/core/thread_pool.hpp"
#include "tensor_detail.hpp"

namespace rkiqt {

using detail::acc_grad;
using detail::alloc;
using detail::attach;

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(w.ndim() == 2, Err::ShapeMismatch, "linear: weight must be 2-D");
  const idx_t K = w.dim(0), N = w.dim(1);
  check(x.dim(x.ndim() - 1) == K, Err::ShapeMismatch,
        "linear: input last dim " + shape_str(x.shape()) + " vs weight " +
            shape_str(w.shape()));
  const idx_t R = x.numel() / K;
  if (b.defined())
    check(b.numel() == N, Err::ShapeMismatch, "linear: bias size mismatch");

  Shape oshape = x.shape();
  oshape.back() = N;
  Tensor out = alloc(std::move(oshape));
  kern::gemm_nn(R, N, K, x.data().data(), K, w.data().data(), N,
                out.data().data(), N);
  if (b.defined()) {
    Scalar* dst = out.data().data();
    const Scalar* bias = b.data().data();
    for (idx_t r = 0; r < R; ++r)
      kern::active().vadd(N, dst + r * N, bias, dst + r * N);
  }

  auto bw = [px = x.node().get(), pw = w.node().get(),
             pb = b.defined() ? b.node().get() : nullptr, R, K,
             N](TensorNode& self) {
    const Scalar* go = self.grad.data();
    if (px->requires_grad)
      kern::gemm_nt(R, K, N, go, N, pw->val.data(), N,
                    px->ensure_grad().data(), K, /*accum=*/true);
    if (pw->requires_grad)
      kern::gemm_tn(K, N, R, px->val.data(), K, go, N,
                    pw->ensure_grad().data(), N, /*accum=*/true);
    if (pb && pb->requires_grad) {
      auto& gb = pb->ensure_grad();
      for (idx_t r = 0; r < R; ++r)
        kern::active().vadd(N, gb.data(), go + r * N, gb.data());
    }
  };
  if (b.defined())
    attach(out, {x, w, b}, bw);
  else
    attach(out, {x, w}, bw);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
        Err::ShapeMismatch, "matmul: incompatible shapes");
  return linear(a, b);
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b) {
  check(a.ndim() == 3 && b.ndim() == 3, Err::ShapeMismatch, "bmm: rank != 3");
  const idx_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
  check(b.dim(0) == B, Err::ShapeMismatch, "bmm: batch mismatch");
  const idx_t N = trans_b ? b.dim(1) : b.dim(2);
  check((trans_b ? b.dim(2) : b.dim(1)) == K, Err::ShapeMismatch,
        "bmm: contraction mismatch");

  Tensor out = alloc({B, M, N});
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  Scalar* po = out.data().data();
  const idx_t as = M * K, bs = trans_b ? N * K : K * N, os = M * N;
  const auto& k = kern::active();
  global_pool().parallel_for(0, B, 1, [&](idx_t i0, idx_t i1) {
    for (idx_t i = i0; i < i1; ++i) {
      if (trans_b)
        k.gemm_nt(M, N, K, pa + i * as, K, pb + i * bs, K, po + i * os, N,
                  false);
      else
        k.gemm_nn(M, N, K, pa + i * as, K, pb + i * bs, N, po + i * os, N,
                  false);
    }
  });

  attach(out, {a, b},
         [na = a.node().get(), nb = b.node().get(), B, M, N, K, as, bs, os,
          trans_b](TensorNode& self) {
           const Scalar* go = self.grad.data();
           const auto& kn = kern::active();
           // per-batch output slices are disjoint in both grads
           Scalar* ga = na->requires_grad ? na->ensure_grad().data() : nullptr;
           Scalar* gb = nb->requires_grad ? nb->ensure_grad().data() : nullptr;
           global_pool().parallel_for(0, B, 1, [&](idx_t i0, idx_t i1) {
             for (idx_t i = i0; i < i1; ++i) {
               if (ga) {
                 if (trans_b)  // dA = gO * B
                   kn.gemm_nn(M, K, N, go + i * os, N,
                              nb->val.data() + i * bs, K, ga + i * as, K, true);
                 else  // dA = gO * B^T
                   kn.gemm_nt(M, K, N, go + i * os, N,
                              nb->val.data() + i * bs, N, ga + i * as, K, true);
               }
               if (gb) {
                 if (trans_b)  // dB = gO^T * A
                   kn.gemm_tn(N, K, M, go + i * os, N,
                              na->val.data() + i * as, K, gb + i * bs, K, true);
                 else  // dB = A^T * gO
                   kn.gemm_tn(K, N, M, na->val.data() + i * as, K, go + i * os,
                              N, gb + i * bs, N, true);
               }
             }
           });
         });
  return out;
}

// ---- convolution -----------------------------------------------------------

namespace {

struct ConvDims {
  idx_t B, Ci, H, W, Co, k, stride, pad, Ho, Wo;
};

// col: [Ci*k*k, Ho*Wo]
void im2col(const Scalar* x, const ConvDims& d, Scalar* col) {
  const idx_t HoWo = d.Ho * d.Wo;
  for (idx_t c = 0; c < d.Ci; ++c) {
    for (idx_t u = 0; u < d.k; ++u) {
      for (idx_t v = 0; v < d.k; ++v) {
        Scalar* dst = col + ((c * d.k + u) * d.k + v) * HoWo;
        for (idx_t yo = 0; yo < d.Ho; ++yo) {
          const idx_t yi = yo * d.stride + u - d.pad;
          if (yi < 0 || yi >= d.H) {
            std::fill(dst + yo * d.Wo, dst + (yo + 1) * d.Wo, 0.0);
            continue;
          }
          const Scalar* srow = x + (c * d.H + yi) * d.W;
          for (idx_t xo = 0; xo < d.Wo; ++xo) {
            const idx_t xi = xo * d.stride + v - d.pad;
            dst[yo * d.Wo + xo] =
                (xi >= 0 && xi < d.W) ? srow[xi] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_acc(const Scalar* col, const ConvDims& d, Scalar* gx) {
  const idx_t HoWo = d.Ho * d.Wo;
  for (idx_t c = 0; c < d.Ci; ++c) {
    for (idx_t u = 0; u < d.k; ++u) {
      for (idx_t v = 0; v < d.k; ++v) {
        const Scalar* src = col + ((c * d.k + u) * d.k + v) * HoWo;
        for (idx_t yo = 0; yo < d.Ho; ++yo) {
          const idx_t yi = yo * d.stride + u - d.pad;
          if (yi < 0 || yi >= d.H) continue;
          Scalar* grow = gx + (c * d.H + yi) * d.W;
          for (idx_t xo = 0; xo < d.Wo; ++xo) {
            const idx_t xi = xo * d.stride + v - d.pad;
            if (xi >= 0 && xi < d.W) grow[xi] += src[yo * d.Wo + xo];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, idx_t stride,
              idx_t pad) {
  check(x.ndim() == 4 && w.ndim() == 4, Err::ShapeMismatch,
        "conv2d: expects x[B,C,H,W], w[Co,Ci,k,k]");
  ConvDims d;
  d.B = x.dim(0);
  d.Ci = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.Co = w.dim(0);
  d.k = w.dim(2);
  check(w.dim(1) == d.Ci && w.dim(3) == d.k, Err::ShapeMismatch,
        "conv2d: weight shape mismatch");
  d.stride = stride;
  d.pad = pad;
  d.Ho = (d.H + 2 * pad - d.k) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.k) / stride + 1;
  check(d.Ho > 0 && d.Wo > 0, Err::ShapeMismatch, "conv2d: empty output");
  if (b.defined())
    check(b.numel() == d.Co, Err::ShapeMismatch, "conv2d: bias size");

  const idx_t CKK = d.Ci * d.k * d.k;
  const idx_t HoWo = d.Ho * d.Wo;
  const bool needs_grad =
      grad_enabled() &&
      (x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));

  // Keep the unfolded inputs when a backward pass will need them.
  auto cols = std::make_shared<std::vector<std::vector<Scalar>>>();
  if (needs_grad) cols->resize(std::size_t(d.B));

  Tensor out = alloc({d.B, d.Co, d.Ho, d.Wo});
  const Scalar* px = x.data().data();
  const Scalar* pw = w.data().data();
  Scalar* po = out.data().data();
  const idx_t xs = d.Ci * d.H * d.W, os = d.Co * HoWo;

  global_pool().parallel_for(0, d.B, 1, [&](idx_t b0, idx_t b1) {
    std::vector<Scalar> scratch;
    for (idx_t i = b0; i < b1; ++i) {
      std::vector<Scalar>* col;
      if (needs_grad) {
        (*cols)[std::size_t(i)].resize(std::size_t(CKK * HoWo));
        col = &(*cols)[std::size_t(i)];
      } else {
        scratch.resize(std::size_t(CKK * HoWo));
        col = &scratch;
      }
      im2col(px + i * xs, d, col->data());
      kern::active().gemm_nn(d.Co, HoWo, CKK, pw, CKK, col->data(), HoWo,
                             po + i * os, HoWo, false);
    }
  });
  if (b.defined()) {
    const Scalar* bias = b.data().data();
    for (idx_t i = 0; i < d.B; ++i)
      for (idx_t c = 0; c < d.Co; ++c) {
        Scalar* dst = po + i * os + c * HoWo;
        for (idx_t j = 0; j < HoWo; ++j) dst[j] += bias[c];
      }
  }

  auto bw = [nx = x.node().get(), nw = w.node().get(),
             nb = b.defined() ? b.node().get() : nullptr, d, CKK, HoWo, xs, os,
             cols](TensorNode& self) {
    const Scalar* go = self.grad.data();
    if (nw->requires_grad) {
      Scalar* gw = nw->ensure_grad().data();
      for (idx_t i = 0; i < d.B; ++i)
        kern::gemm_nt(d.Co, CKK, HoWo, go + i * os, HoWo,
                      (*cols)[std::size_t(i)].data(), HoWo, gw, CKK, true);
    }
    if (nb && nb->requires_grad) {
      Scalar* gb = nb->ensure_grad().data();
      for (idx_t i = 0; i < d.B; ++i)
        for (idx_t c = 0; c < d.Co; ++c)
          gb[c] += kern::active().vsum(HoWo, go + i * os + c * HoWo);
    }
    if (nx->requires_grad) {
      Scalar* gx = nx->ensure_grad().data();
      std::vector<Scalar> gcol(std::size_t(CKK * HoWo));
      for (idx_t i = 0; i < d.B; ++i) {
        kern::gemm_tn(CKK, HoWo, d.Co, nw->val.data(), CKK, go + i * os, HoWo,
                      gcol.data(), HoWo, false);
        col2im_acc(gcol.data(), d, gx + i * xs);
      }
    }
  };
  if (b.defined())
    attach(out, {x, w, b}, bw);
  else
    attach(out, {x, w}, bw);
  return out;
}

Tensor avg_pool(const Tensor& x, idx_t k, idx_t stride) {
  check(x.ndim() == 4, Err::ShapeMismatch, "avg_pool: expects [B,C,H,W]");
  const idx_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const idx_t Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  check(Ho > 0 && Wo > 0, Err::ShapeMismatch, "avg_pool: empty output");
  Tensor out = alloc({B, C, Ho, Wo});
  const Scalar inv = 1.0 / Scalar(k * k);
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  for (idx_t bc = 0; bc < B * C; ++bc) {
    const Scalar* plane = src + bc * H * W;
    Scalar* oplane = dst + bc * Ho * Wo;
    for (idx_t yo = 0; yo < Ho; ++yo)
      for (idx_t xo = 0; xo < Wo; ++xo) {
        Scalar s = 0;
        for (idx_t u = 0; u < k; ++u)
          for (idx_t v = 0; v < k; ++v)
            s += plane[(yo * stride + u) * W + xo * stride + v];
        oplane[yo * Wo + xo] = s * inv;
      }
  }
  attach(out, {x},
         [px = x.node().get(), B, C, H, W, Ho, Wo, k, stride, inv](TensorNode& self) {
           if (!px->requires_grad) return;
           auto& g = px->ensure_grad();
           const Scalar* go = self.grad.data();
           for (idx_t bc = 0; bc < B * C; ++bc) {
             Scalar* gplane = g.data() + bc * H * W;
             const Scalar* oplane = go + bc * Ho * Wo;
             for (idx_t yo = 0; yo < Ho; ++yo)
               for (idx_t xo = 0; xo < Wo; ++xo) {
                 const Scalar s = oplane[yo * Wo + xo] * inv;
                 for (idx_t u = 0; u < k; ++u)
                   for (idx_t v = 0; v < k; ++v)
                     gplane[(yo * stride + u) * W + xo * stride + v] += s;
               }
           }
         });
  return out;
}

Tensor spatial_mean(const Tensor& x) {
  check(x.ndim() == 4, Err::ShapeMismatch, "spatial_mean: expects [B,C,H,W]");
  const idx_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor out = alloc({B, C});
  const Scalar inv = 1.0 / Scalar(HW);
  for (idx_t bc = 0; bc < B * C; ++bc)
    out.data()[bc] = kern::active().vsum(HW, x.data().data() + bc * HW) * inv;
  attach(out, {x}, [px = x.node().get(), B, C, HW, inv](TensorNode& self) {
    if (!px->requires_grad) return;
    auto& g = px->ensure_grad();
    for (idx_t bc = 0; bc < B * C; ++bc) {
      const Scalar s = self.grad[bc] * inv;
      Scalar* gp = g.data() + bc * HW;
      for (idx_t i = 0; i < HW; ++i) gp[i] += s;
    }
  });
  return out;
}

Tensor involution_apply(const Tensor& x, const Tensor& ker, idx_t ksize,
                        idx_t stride, idx_t pad, idx_t groups) {
  check(x.ndim() == 4 && ker.ndim() == 5, Err::ShapeMismatch,
        "involution_apply: expects x[B,C,H,W], ker[B,G,K*K,Ho,Wo]");
  const idx_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(C % groups == 0, Err::ShapeMismatch,
        "involution_apply: channels not divisible by groups");
  const idx_t Ho = (H + 2 * pad - ksize) / stride + 1;
  const idx_t Wo = (W + 2 * pad - ksize) / stride + 1;
  check(ker.dim(0) == B && ker.dim(1) == groups &&
            ker.dim(2) == ksize * ksize && ker.dim(3) == Ho && ker.dim(4) == Wo,
        Err::ShapeMismatch, "involution_apply: kernel tensor shape mismatch");
  const idx_t cpg = C / groups;

  Tensor out = alloc({B, C, Ho, Wo});
  const Scalar* px = x.data().data();
  const Scalar* pk = ker.data().data();
  Scalar* po = out.data().data();
  const idx_t xs = C * H * W, ks = groups * ksize * ksize * Ho * Wo,
              os = C * Ho * Wo;

  // valid xo interval for a tap column offset off = v - pad:
  // 0 <= xo*stride + off < W
  const auto xo_range = [stride, W, Wo](idx_t off, idx_t& lo, idx_t& hi) {
    lo = off < 0 ? (-off + stride - 1) / stride : 0;
    hi = std::min(Wo, off >= W ? idx_t(0) : (W - 1 - off) / stride + 1);
  };

  global_pool().parallel_for(0, B, 1, [&](idx_t b0, idx_t b1) {
    for (idx_t b = b0; b < b1; ++b) {
      for (idx_t c = 0; c < C; ++c) {
        const idx_t g = c / cpg;
        const Scalar* plane = px + b * xs + c * H * W;
        Scalar* oplane = po + b * os + c * Ho * Wo;
        std::fill(oplane, oplane + Ho * Wo, 0.0);
        for (idx_t u = 0; u < ksize; ++u) {
          for (idx_t v = 0; v < ksize; ++v) {
            const Scalar* kplane =
                pk + b * ks + (g * ksize * ksize + u * ksize + v) * Ho * Wo;
            const idx_t xoff = v - pad;
            idx_t xo_lo, xo_hi;
            xo_range(xoff, xo_lo, xo_hi);
            for (idx_t yo = 0; yo < Ho; ++yo) {
              const idx_t yi = yo * stride + u - pad;
              if (yi < 0 || yi >= H) continue;
              Scalar* orow = oplane + yo * Wo;
              const Scalar* krow = kplane + yo * Wo;
              const Scalar* xrow = plane + yi * W + xoff;
              if (stride == 1) {
                for (idx_t xo = xo_lo; xo < xo_hi; ++xo)
                  orow[xo] += krow[xo] * xrow[xo];
              } else {
                for (idx_t xo = xo_lo; xo < xo_hi; ++xo)
                  orow[xo] += krow[xo] * xrow[xo * stride];
              }
            }
          }
        }
      }
    }
  });

  attach(out, {x, ker},
         [nx = x.node().get(), nk = ker.node().get(), B, C, H, W, Ho, Wo,
          ksize, stride, pad, cpg, xs, ks, os, xo_range](TensorNode& self) {
           const Scalar* go = self.grad.data();
           Scalar* gx = nx->requires_grad ? nx->ensure_grad().data() : nullptr;
           Scalar* gk = nk->requires_grad ? nk->ensure_grad().data() : nullptr;
           // per-batch slices of both grads are disjoint
           global_pool().parallel_for(0, B, 1, [&](idx_t b0, idx_t b1) {
             for (idx_t b = b0; b < b1; ++b) {
               for (idx_t c = 0; c < C; ++c) {
                 const idx_t g = c / cpg;
                 const Scalar* plane = nx->val.data() + b * xs + c * H * W;
                 const Scalar* gop = go + b * os + c * Ho * Wo;
                 for (idx_t u = 0; u < ksize; ++u) {
                   for (idx_t v = 0; v < ksize; ++v) {
                     const idx_t koff =
                         b * ks + (g * ksize * ksize + u * ksize + v) * Ho * Wo;
                     const idx_t xoff = v - pad;
                     idx_t xo_lo, xo_hi;
                     xo_range(xoff, xo_lo, xo_hi);
                     for (idx_t yo = 0; yo < Ho; ++yo) {
                       const idx_t yi = yo * stride + u - pad;
                       if (yi < 0 || yi >= H) continue;
                       const Scalar* grow = gop + yo * Wo;
                       const Scalar* krow = nk->val.data() + koff + yo * Wo;
                       const Scalar* xrow = plane + yi * W + xoff;
                       Scalar* gxrow =
                           gx ? gx + b * xs + c * H * W + yi * W + xoff
                              : nullptr;
                       Scalar* gkrow =
                           gk ? gk + koff + yo * Wo : nullptr;
                       for (idx_t xo = xo_lo; xo < xo_hi; ++xo) {
                         const Scalar gv = grow[xo];
                         if (gxrow) gxrow[xo * stride] += gv * krow[xo];
                         if (gkrow) gkrow[xo] += gv * xrow[xo * stride];
                       }
                     }
                   }
                 }
               }
             }
           });
         });
  return out;
}

Tensor mask_tokens(const Tensor& x, const std::vector<std::uint8_t>& mask,
                   const Tensor& fill) {
  check(x.ndim() == 3, Err::ShapeMismatch, "mask_tokens: expects [B,T,D]");
  const idx_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
  check(idx_t(mask.size()) == B * T, Err::ShapeMismatch,
        "mask_tokens: mask length mismatch");
  check(fill.numel() == D, Err::ShapeMismatch, "mask_tokens: fill dim mismatch");

  Tensor out = alloc(x.shape());
  const Scalar* src = x.data().data();
  const Scalar* fv = fill.data().data();
  Scalar* dst = out.data().data();
  for (idx_t t = 0; t < B * T; ++t) {
    if (mask[std::size_t(t)])
      std::copy(fv, fv + D, dst + t * D);
    else
      std::copy(src + t * D, src + (t + 1) * D, dst + t * D);
  }
  attach(out, {x, fill},
         [px = x.node().get(), pf = fill.node().get(), mask, B, T,
          D](TensorNode& self) {
           const Scalar* go = self.grad.data();
           if (px->requires_grad) {
             auto& g = px->ensure_grad();
             for (idx_t t = 0; t < B * T; ++t)
               if (!mask[std::size_t(t)])
                 kern::active().vadd(D, g.data() + t * D, go + t * D,
                                     g.data() + t * D);
           }
           if (pf->requires_grad) {
             auto& g = pf->ensure_grad();
             for (idx_t t = 0; t < B * T; ++t)
               if (mask[std::size_t(t)])
                 kern::active().vadd(D, g.data(), go + t * D, g.data());
           }
         });
  return out;
}

Tensor add_broadcast0(const Tensor& x, const Tensor& p) {
  check(x.ndim() >= 2, Err::ShapeMismatch, "add_broadcast0: rank too small");
  const idx_t B = x.dim(0);
  const idx_t rest = x.numel() / B;
  check(p.numel() == rest, Err::ShapeMismatch,
        "add_broadcast0: trailing shape mismatch");
  Tensor out = alloc(x.shape());
  const Scalar* src = x.data().data();
  const Scalar* pv = p.data().data();
  Scalar* dst = out.data().data();
  for (idx_t b = 0; b < B; ++b)
    kern::active().vadd(rest, src + b * rest, pv, dst + b * rest);
  attach(out, {x, p},
         [px = x.node().get(), pp = p.node().get(), B, rest](TensorNode& self) {
           const Scalar* go = self.grad.data();
           if (px->requires_grad) acc_grad(px, self.grad);
           if (pp->requires_grad) {
             auto& g = pp->ensure_grad();
             for (idx_t b = 0; b < B; ++b)
               kern::active().vadd(rest, g.data(), go + b * rest, g.data());
           }
         });
  return out;
}

}  // namespace rkiqt
