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

// NEON lane (aarch64, float64x2). Same partitioning as the AVX2 lane.

#include "rkiqt/core/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace rkiqt::kern {
namespace {

void n_gemm_nn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  if (!accum) {
    for (idx m = 0; m < M; ++m) {
      double* crow = C + m * ldc;
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    }
  }
  for (idx m = 0; m < M; ++m) {
    double* crow = C + m * ldc;
    const double* arow = A + m * lda;
    for (idx k = 0; k < K; ++k) {
      const float64x2_t av = vdupq_n_f64(arow[k]);
      const double* brow = B + k * ldb;
      idx n = 0;
      for (; n + 4 <= N; n += 4) {
        float64x2_t c0 = vld1q_f64(crow + n);
        float64x2_t c1 = vld1q_f64(crow + n + 2);
        c0 = vfmaq_f64(c0, av, vld1q_f64(brow + n));
        c1 = vfmaq_f64(c1, av, vld1q_f64(brow + n + 2));
        vst1q_f64(crow + n, c0);
        vst1q_f64(crow + n + 2, c1);
      }
      for (; n < N; ++n) crow[n] += arow[k] * brow[n];
    }
  }
}

void n_gemm_nt(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    const double* arow = A + m * lda;
    double* crow = C + m * ldc;
    for (idx n = 0; n < N; ++n) {
      const double* brow = B + n * ldb;
      float64x2_t acc = vdupq_n_f64(0.0);
      idx k = 0;
      for (; k + 2 <= K; k += 2)
        acc = vfmaq_f64(acc, vld1q_f64(arow + k), vld1q_f64(brow + k));
      double d = vaddvq_f64(acc);
      for (; k < K; ++k) d += arow[k] * brow[k];
      crow[n] = accum ? crow[n] + d : d;
    }
  }
}

void n_gemm_tn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    double* crow = C + m * ldc;
    if (!accum)
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    for (idx k = 0; k < K; ++k) {
      const float64x2_t av = vdupq_n_f64(A[k * lda + m]);
      const double* brow = B + k * ldb;
      idx n = 0;
      for (; n + 2 <= N; n += 2) {
        float64x2_t cv = vld1q_f64(crow + n);
        cv = vfmaq_f64(cv, av, vld1q_f64(brow + n));
        vst1q_f64(crow + n, cv);
      }
      for (; n < N; ++n) crow[n] += A[k * lda + m] * brow[n];
    }
  }
}

void n_vadd(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void n_vsub(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void n_vmul(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void n_vaxpy(idx n, double s, const double* x, double* y) {
  const float64x2_t sv = vdupq_n_f64(s);
  idx i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t yv = vld1q_f64(y + i);
    yv = vfmaq_f64(yv, sv, vld1q_f64(x + i));
    vst1q_f64(y + i, yv);
  }
  for (; i < n; ++i) y[i] += s * x[i];
}
void n_vscale(idx n, double s, const double* x, double* out) {
  const float64x2_t sv = vdupq_n_f64(s);
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(sv, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}
double n_vdot(idx n, const double* a, const double* b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double d = vaddvq_f64(acc);
  for (; i < n; ++i) d += a[i] * b[i];
  return d;
}
double n_vsum(idx n, const double* a) {
  float64x2_t acc = vdupq_n_f64(0.0);
  idx i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double d = vaddvq_f64(acc);
  for (; i < n; ++i) d += a[i];
  return d;
}
void n_vrelu(idx n, const double* x, double* out) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  idx i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmaxq_f64(zero, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Kernels* neon_kernels() {
  static const Kernels table{
      "neon",  n_gemm_nn, n_gemm_nt, n_gemm_tn, n_vadd, n_vsub,
      n_vmul,  n_vaxpy,   n_vscale,  n_vdot,    n_vsum, n_vrelu,
  };
  return &table;
}

}  // namespace rkiqt::kern

#else

namespace rkiqt::kern {
const Kernels* neon_kernels() { return nullptr; }
}  // namespace rkiqt::kern

#endif
