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

// Reference lane. Kept deliberately simple: this is the implementation the
// SIMD lanes are equivalence-tested against.

#include "rkiqt/core/kernels.hpp"

namespace rkiqt::kern {
namespace {

void s_gemm_nn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    double* crow = C + m * ldc;
    if (!accum) {
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    }
    const double* arow = A + m * lda;
    for (idx k = 0; k < K; ++k) {
      const double a = arow[k];
      const double* brow = B + k * ldb;
      for (idx n = 0; n < N; ++n) crow[n] += a * brow[n];
    }
  }
}

void s_gemm_nt(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    const double* arow = A + m * lda;
    double* crow = C + m * ldc;
    for (idx n = 0; n < N; ++n) {
      const double* brow = B + n * ldb;
      double acc = 0.0;
      for (idx k = 0; k < K; ++k) acc += arow[k] * brow[k];
      crow[n] = accum ? crow[n] + acc : acc;
    }
  }
}

void s_gemm_tn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
               idx ldb, double* C, idx ldc, bool accum) {
  for (idx m = 0; m < M; ++m) {
    double* crow = C + m * ldc;
    if (!accum) {
      for (idx n = 0; n < N; ++n) crow[n] = 0.0;
    }
    for (idx k = 0; k < K; ++k) {
      const double a = A[k * lda + m];
      const double* brow = B + k * ldb;
      for (idx n = 0; n < N; ++n) crow[n] += a * brow[n];
    }
  }
}

void s_vadd(idx n, const double* a, const double* b, double* out) {
  for (idx i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void s_vsub(idx n, const double* a, const double* b, double* out) {
  for (idx i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void s_vmul(idx n, const double* a, const double* b, double* out) {
  for (idx i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void s_vaxpy(idx n, double s, const double* x, double* y) {
  for (idx i = 0; i < n; ++i) y[i] += s * x[i];
}
void s_vscale(idx n, double s, const double* x, double* out) {
  for (idx i = 0; i < n; ++i) out[i] = s * x[i];
}
double s_vdot(idx n, const double* a, const double* b) {
  double acc = 0.0;
  for (idx i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}
double s_vsum(idx n, const double* a) {
  double acc = 0.0;
  for (idx i = 0; i < n; ++i) acc += a[i];
  return acc;
}
void s_vrelu(idx n, const double* x, double* out) {
  for (idx i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table{
      "scalar",  s_gemm_nn, s_gemm_nt, s_gemm_tn, s_vadd, s_vsub,
      s_vmul,    s_vaxpy,   s_vscale,  s_vdot,    s_vsum, s_vrelu,
  };
  return table;
}

}  // namespace rkiqt::kern
