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

// Independent reference computations used by the test suites. Everything in
// here works on raw value arrays with plain nested loops; nothing routes
// through the library's operator implementations.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rkiqt/ops/involution.hpp"
#include "rkiqt/ops/mcd_modules.hpp"

namespace rkiqt::oracle {

// Zero-padded direct convolution, quadruple loop over output and taps.
inline std::vector<double> conv2d_reference(
    const std::vector<double>& x, int B, int Ci, int H, int W,
    const std::vector<double>& w, const std::vector<double>& bias, int Co,
    int k, int stride, int pad) {
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  std::vector<double> out(std::size_t(B) * Co * Ho * Wo, 0.0);
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co)
      for (int yo = 0; yo < Ho; ++yo)
        for (int xo = 0; xo < Wo; ++xo) {
          double acc = bias.empty() ? 0.0 : bias[std::size_t(co)];
          for (int ci = 0; ci < Ci; ++ci)
            for (int u = 0; u < k; ++u)
              for (int v = 0; v < k; ++v) {
                const int yi = yo * stride + u - pad;
                const int xi = xo * stride + v - pad;
                if (yi < 0 || yi >= H || xi < 0 || xi >= W) continue;
                acc += w[std::size_t(((co * Ci + ci) * k + u) * k + v)] *
                       x[std::size_t(((b * Ci + ci) * H + yi) * W + xi)];
              }
          out[std::size_t(((b * Co + co) * Ho + yo) * Wo + xo)] = acc;
        }
  return out;
}

// Full involution recomputed naively: pooled site features, the two 1x1
// layers of the kernel-generation branch, then the five-nested-loop
// application of the per-site kernels.
inline std::vector<double> involution_reference(
    const std::vector<double>& x, int B, int C, int H, int W,
    const ops::InvolutionConfig& cfg, const ops::InvolutionParams& params) {
  const int K = cfg.kernel_size, s = cfg.stride, G = cfg.groups;
  const int pad = (K - 1) / 2;
  const int Ho = (H + 2 * pad - K) / s + 1;
  const int Wo = (W + 2 * pad - K) / s + 1;
  const int cpg = C / G;

  // site features (stride pooling)
  const int Hs = s > 1 ? (H - s) / s + 1 : H;
  const int Ws = s > 1 ? (W - s) / s + 1 : W;
  std::vector<double> site(std::size_t(B) * C * Hs * Ws);
  if (s > 1) {
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (int y = 0; y < Hs; ++y)
          for (int xx = 0; xx < Ws; ++xx) {
            double acc = 0;
            for (int u = 0; u < s; ++u)
              for (int v = 0; v < s; ++v)
                acc += x[std::size_t(((b * C + c) * H + y * s + u) * W +
                                     xx * s + v)];
            site[std::size_t(((b * C + c) * Hs + y) * Ws + xx)] =
                acc / double(s * s);
          }
  } else {
    site = x;
  }

  const auto& wr = params.w_reduce.data();
  const auto& br = params.b_reduce.data();
  const auto& we = params.w_expand.data();
  const auto& be = params.b_expand.data();
  const int Cr = int(params.w_reduce.dim(0));

  std::vector<double> out(std::size_t(B) * C * Ho * Wo, 0.0);
  std::vector<double> hidden(std::size_t(Cr), 0.0);
  std::vector<double> ker(std::size_t(G) * K * K, 0.0);
  for (int b = 0; b < B; ++b) {
    for (int yo = 0; yo < Ho; ++yo) {
      for (int xo = 0; xo < Wo; ++xo) {
        for (int cr = 0; cr < Cr; ++cr) {
          double acc = br[std::size_t(cr)];
          for (int c = 0; c < C; ++c)
            acc += wr[std::size_t(cr * C + c)] *
                   site[std::size_t(((b * C + c) * Hs + yo) * Ws + xo)];
          hidden[std::size_t(cr)] = std::max(0.0, acc);
        }
        for (int gk = 0; gk < G * K * K; ++gk) {
          double acc = be[std::size_t(gk)];
          for (int cr = 0; cr < Cr; ++cr)
            acc += we[std::size_t(gk * Cr + cr)] * hidden[std::size_t(cr)];
          ker[std::size_t(gk)] = acc;
        }
        for (int c = 0; c < C; ++c) {
          const int g = c / cpg;
          double acc = 0;
          for (int u = 0; u < K; ++u)
            for (int v = 0; v < K; ++v) {
              const int yi = yo * s + u - pad;
              const int xi = xo * s + v - pad;
              if (yi < 0 || yi >= H || xi < 0 || xi >= W) continue;
              acc += ker[std::size_t((g * K + u) * K + v)] *
                     x[std::size_t(((b * C + c) * H + yi) * W + xi)];
            }
          out[std::size_t(((b * C + c) * Ho + yo) * Wo + xo)] = acc;
        }
      }
    }
  }
  return out;
}

// Spearman via the explicit rank formula, ranks by counting (O(n^2)).
inline std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = less + (equal + 1) / 2.0;  // average rank for ties
  }
  return ranks;
}

inline double pearson_reference(const std::vector<double>& a,
                                const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

inline double srcc_reference(const std::vector<double>& pred,
                             const std::vector<double>& gt) {
  return pearson_reference(counting_ranks(pred), counting_ranks(gt));
}

}  // namespace rkiqt::oracle
