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

#include <cstdint>

namespace rkiqt::kern {

using idx = std::int64_t;

// Dense double-precision primitives. Every entry point has a scalar
// reference implementation and may have SIMD variants; the active table is
// chosen once at startup from CPU features (override: RKIQT_KERNELS=scalar).
//
// gemm_nn: C[M,N] (+)= A[M,K] * B[K,N]
// gemm_nt: C[M,N] (+)= A[M,K] * B[N,K]^T
// gemm_tn: C[M,N] (+)= A[K,M]^T * B[K,N]
// lda/ldb/ldc are row strides of the stored matrices.
struct Kernels {
  const char* name;
  void (*gemm_nn)(idx M, idx N, idx K, const double* A, idx lda,
                  const double* B, idx ldb, double* C, idx ldc, bool accum);
  void (*gemm_nt)(idx M, idx N, idx K, const double* A, idx lda,
                  const double* B, idx ldb, double* C, idx ldc, bool accum);
  void (*gemm_tn)(idx M, idx N, idx K, const double* A, idx lda,
                  const double* B, idx ldb, double* C, idx ldc, bool accum);
  void (*vadd)(idx n, const double* a, const double* b, double* out);
  void (*vsub)(idx n, const double* a, const double* b, double* out);
  void (*vmul)(idx n, const double* a, const double* b, double* out);
  void (*vaxpy)(idx n, double s, const double* x, double* y);  // y += s*x
  void (*vscale)(idx n, double s, const double* x, double* out);
  double (*vdot)(idx n, const double* a, const double* b);
  double (*vsum)(idx n, const double* a);
  void (*vrelu)(idx n, const double* x, double* out);
};

const Kernels& scalar_kernels();
const Kernels& active();

// Force a lane by name ("scalar", "avx2", "neon", "auto"); returns false if
// the lane is unavailable on this machine.
bool force_lane(const char* name);

// Threaded front ends used by the tensor layer. Partitioning is by output
// rows only, so results are identical for any worker count.
void gemm_nn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum = false);
void gemm_nt(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum = false);
void gemm_tn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum = false);

}  // namespace rkiqt::kern
