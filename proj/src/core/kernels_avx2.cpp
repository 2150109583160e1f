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

// AVX2+FMA lane. This translation unit is compiled with -mavx2 -mfma; the
// dispatcher only installs it after a runtime CPU check.

#include "rkiqt/core/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace rkiqt::kern {
namespace {

// C[M,N] (+)= A[M,K] * B[K,N], broadcast-A / stream-B scheme.
// 4 C-rows x 16 C-columns of accumulators live in registers.
void a_gemm_nn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  constexpr idx MR = 4;
  constexpr idx NR = 16;  // 4 ymm per row

  if (!accum) {
    for (idx m = 0; m < M; ++m) {
      double* crow = C + m * ldc;
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    }
  }

  idx m0 = 0;
  for (; m0 + MR <= M; m0 += MR) {
    idx n0 = 0;
    for (; n0 + NR <= N; n0 += NR) {
      __m256d acc[MR][4];
      for (int r = 0; r < MR; ++r)
        for (int c = 0; c < 4; ++c)
          acc[r][c] = _mm256_loadu_pd(C + (m0 + r) * ldc + n0 + 4 * c);
      for (idx k = 0; k < K; ++k) {
        const double* brow = B + k * ldb + n0;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        const __m256d b2 = _mm256_loadu_pd(brow + 8);
        const __m256d b3 = _mm256_loadu_pd(brow + 12);
        for (int r = 0; r < MR; ++r) {
          const __m256d a = _mm256_set1_pd(A[(m0 + r) * lda + k]);
          acc[r][0] = _mm256_fmadd_pd(a, b0, acc[r][0]);
          acc[r][1] = _mm256_fmadd_pd(a, b1, acc[r][1]);
          acc[r][2] = _mm256_fmadd_pd(a, b2, acc[r][2]);
          acc[r][3] = _mm256_fmadd_pd(a, b3, acc[r][3]);
        }
      }
      for (int r = 0; r < MR; ++r)
        for (int c = 0; c < 4; ++c)
          _mm256_storeu_pd(C + (m0 + r) * ldc + n0 + 4 * c, acc[r][c]);
    }
    // column remainder
    for (idx k = 0; k < K; ++k) {
      const double* brow = B + k * ldb;
      for (int r = 0; r < MR; ++r) {
        const double a = A[(m0 + r) * lda + k];
        double* crow = C + (m0 + r) * ldc;
        idx n = n0;
        const __m256d av = _mm256_set1_pd(a);
        for (; n + 4 <= N; n += 4) {
          __m256d cv = _mm256_loadu_pd(crow + n);
          cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + n), cv);
          _mm256_storeu_pd(crow + n, cv);
        }
        for (; n < N; ++n) crow[n] += a * brow[n];
      }
    }
  }
  // row remainder
  for (; m0 < M; ++m0) {
    double* crow = C + m0 * ldc;
    const double* arow = A + m0 * lda;
    for (idx k = 0; k < K; ++k) {
      const __m256d av = _mm256_set1_pd(arow[k]);
      const double* brow = B + k * ldb;
      idx n = 0;
      for (; n + 4 <= N; n += 4) {
        __m256d cv = _mm256_loadu_pd(crow + n);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + n), cv);
        _mm256_storeu_pd(crow + n, cv);
      }
      for (; n < N; ++n) crow[n] += arow[k] * brow[n];
    }
  }
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// C[M,N] (+)= A[M,K] * B[N,K]^T : rows of A dotted with rows of B.
// 4x4 output block, 16 independent 4-wide accumulators over K.
void a_gemm_nt(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  idx m0 = 0;
  for (; m0 + 4 <= M; m0 += 4) {
    const double* a0 = A + m0 * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    idx n0 = 0;
    for (; n0 + 4 <= N; n0 += 4) {
      const double* b0 = B + n0 * ldb;
      const double* b1 = b0 + ldb;
      const double* b2 = b1 + ldb;
      const double* b3 = b2 + ldb;
      __m256d acc[4][4];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) acc[r][c] = _mm256_setzero_pd();
      idx k = 0;
      for (; k + 4 <= K; k += 4) {
        const __m256d bv0 = _mm256_loadu_pd(b0 + k);
        const __m256d bv1 = _mm256_loadu_pd(b1 + k);
        const __m256d bv2 = _mm256_loadu_pd(b2 + k);
        const __m256d bv3 = _mm256_loadu_pd(b3 + k);
        const __m256d av0 = _mm256_loadu_pd(a0 + k);
        acc[0][0] = _mm256_fmadd_pd(av0, bv0, acc[0][0]);
        acc[0][1] = _mm256_fmadd_pd(av0, bv1, acc[0][1]);
        acc[0][2] = _mm256_fmadd_pd(av0, bv2, acc[0][2]);
        acc[0][3] = _mm256_fmadd_pd(av0, bv3, acc[0][3]);
        const __m256d av1 = _mm256_loadu_pd(a1 + k);
        acc[1][0] = _mm256_fmadd_pd(av1, bv0, acc[1][0]);
        acc[1][1] = _mm256_fmadd_pd(av1, bv1, acc[1][1]);
        acc[1][2] = _mm256_fmadd_pd(av1, bv2, acc[1][2]);
        acc[1][3] = _mm256_fmadd_pd(av1, bv3, acc[1][3]);
        const __m256d av2 = _mm256_loadu_pd(a2 + k);
        acc[2][0] = _mm256_fmadd_pd(av2, bv0, acc[2][0]);
        acc[2][1] = _mm256_fmadd_pd(av2, bv1, acc[2][1]);
        acc[2][2] = _mm256_fmadd_pd(av2, bv2, acc[2][2]);
        acc[2][3] = _mm256_fmadd_pd(av2, bv3, acc[2][3]);
        const __m256d av3 = _mm256_loadu_pd(a3 + k);
        acc[3][0] = _mm256_fmadd_pd(av3, bv0, acc[3][0]);
        acc[3][1] = _mm256_fmadd_pd(av3, bv1, acc[3][1]);
        acc[3][2] = _mm256_fmadd_pd(av3, bv2, acc[3][2]);
        acc[3][3] = _mm256_fmadd_pd(av3, bv3, acc[3][3]);
      }
      const double* arows[4] = {a0, a1, a2, a3};
      const double* brows[4] = {b0, b1, b2, b3};
      for (int r = 0; r < 4; ++r) {
        double* crow = C + (m0 + r) * ldc + n0;
        for (int c = 0; c < 4; ++c) {
          double d = hsum(acc[r][c]);
          for (idx kk = k; kk < K; ++kk) d += arows[r][kk] * brows[c][kk];
          crow[c] = accum ? crow[c] + d : d;
        }
      }
    }
    for (; n0 < N; ++n0) {  // column remainder
      const double* brow = B + n0 * ldb;
      for (int r = 0; r < 4; ++r) {
        const double* arow = A + (m0 + r) * lda;
        __m256d acc = _mm256_setzero_pd();
        idx k = 0;
        for (; k + 4 <= K; k += 4)
          acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + k),
                                _mm256_loadu_pd(brow + k), acc);
        double d = hsum(acc);
        for (; k < K; ++k) d += arow[k] * brow[k];
        double& cv = C[(m0 + r) * ldc + n0];
        cv = accum ? cv + d : d;
      }
    }
  }
  for (; m0 < M; ++m0) {  // row remainder
    const double* arow = A + m0 * lda;
    double* crow = C + m0 * ldc;
    for (idx n = 0; n < N; ++n) {
      const double* brow = B + n * ldb;
      __m256d acc = _mm256_setzero_pd();
      idx k = 0;
      for (; k + 4 <= K; k += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + k),
                              _mm256_loadu_pd(brow + k), acc);
      double d = hsum(acc);
      for (; k < K; ++k) d += arow[k] * brow[k];
      crow[n] = accum ? crow[n] + d : d;
    }
  }
}

// C[M,N] (+)= A[K,M]^T * B[K,N]
void a_gemm_tn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    double* crow = C + m * ldc;
    if (!accum)
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    for (idx k = 0; k < K; ++k) {
      const double a = A[k * lda + m];
      const double* brow = B + k * ldb;
      const __m256d av = _mm256_set1_pd(a);
      idx n = 0;
      for (; n + 4 <= N; n += 4) {
        __m256d cv = _mm256_loadu_pd(crow + n);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + n), cv);
        _mm256_storeu_pd(crow + n, cv);
      }
      for (; n < N; ++n) crow[n] += a * brow[n];
    }
  }
}

void a_vadd(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void a_vsub(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void a_vmul(idx n, const double* a, const double* b, double* out) {
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void a_vaxpy(idx n, double s, const double* x, double* y) {
  const __m256d sv = _mm256_set1_pd(s);
  idx i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(sv, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += s * x[i];
}
void a_vscale(idx n, double s, const double* x, double* out) {
  const __m256d sv = _mm256_set1_pd(s);
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(sv, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}
double a_vdot(idx n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double d = hsum(acc);
  for (; i < n; ++i) d += a[i] * b[i];
  return d;
}
double a_vsum(idx n, const double* a) {
  __m256d acc = _mm256_setzero_pd();
  idx i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double d = hsum(acc);
  for (; i < n; ++i) d += a[i];
  return d;
}
void a_vrelu(idx n, const double* x, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  idx i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Kernels* avx2_kernels() {
  static const Kernels table{
      "avx2",  a_gemm_nn, a_gemm_nt, a_gemm_tn, a_vadd, a_vsub,
      a_vmul,  a_vaxpy,   a_vscale,  a_vdot,    a_vsum, a_vrelu,
  };
  return &table;
}

}  // namespace rkiqt::kern

#else

namespace rkiqt::kern {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace rkiqt::kern

#endif
