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

#include <cstdlib>
#include <cstring>

#include "rkiqt/core/kernels.hpp"
#include "rkiqt/core/thread_pool.hpp"

namespace rkiqt::kern {

const Kernels* avx2_kernels();  // nullptr off-x86
const Kernels* neon_kernels();  // nullptr off-aarch64

namespace {

const Kernels* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    if (const Kernels* k = avx2_kernels()) return k;
  }
#endif
  if (const Kernels* k = neon_kernels()) return k;
  return &scalar_kernels();
}

const Kernels* g_active = nullptr;

const Kernels* resolve() {
  if (const char* env = std::getenv("RKIQT_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
    if (std::strcmp(env, "avx2") == 0 && avx2_kernels()) return avx2_kernels();
    if (std::strcmp(env, "neon") == 0 && neon_kernels()) return neon_kernels();
  }
  return pick_auto();
}

}  // namespace

const Kernels& active() {
  if (!g_active) g_active = resolve();
  return *g_active;
}

bool force_lane(const char* name) {
  if (std::strcmp(name, "auto") == 0) {
    g_active = pick_auto();
    return true;
  }
  if (std::strcmp(name, "scalar") == 0) {
    g_active = &scalar_kernels();
    return true;
  }
  if (std::strcmp(name, "avx2") == 0) {
    if (const Kernels* k = avx2_kernels()) {
#if defined(__x86_64__) || defined(_M_X64)
      if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
        return false;
#endif
      g_active = k;
      return true;
    }
    return false;
  }
  if (std::strcmp(name, "neon") == 0) {
    if (const Kernels* k = neon_kernels()) {
      g_active = k;
      return true;
    }
    return false;
  }
  return false;
}

namespace {
// Below this many multiply-adds a dispatch to the pool costs more than it
// saves.
constexpr idx kParallelFlops = 1 << 18;
}  // namespace

void gemm_nn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum) {
  const Kernels& k = active();
  if (M * N * K < kParallelFlops || global_threads() == 1) {
    k.gemm_nn(M, N, K, A, lda, B, ldb, C, ldc, accum);
    return;
  }
  global_pool().parallel_for(0, M, 8, [&](idx m0, idx m1) {
    k.gemm_nn(m1 - m0, N, K, A + m0 * lda, lda, B, ldb, C + m0 * ldc, ldc,
              accum);
  });
}

void gemm_nt(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum) {
  const Kernels& k = active();
  if (M * N * K < kParallelFlops || global_threads() == 1) {
    k.gemm_nt(M, N, K, A, lda, B, ldb, C, ldc, accum);
    return;
  }
  global_pool().parallel_for(0, M, 8, [&](idx m0, idx m1) {
    k.gemm_nt(m1 - m0, N, K, A + m0 * lda, lda, B, ldb, C + m0 * ldc, ldc,
              accum);
  });
}

void gemm_tn(idx M, idx N, idx K, const double* A, idx lda, const double* B,
             idx ldb, double* C, idx ldc, bool accum) {
  const Kernels& k = active();
  if (M * N * K < kParallelFlops || global_threads() == 1) {
    k.gemm_tn(M, N, K, A, lda, B, ldb, C, ldc, accum);
    return;
  }
  // split output rows: column m of A^T is row of C
  global_pool().parallel_for(0, M, 8, [&](idx m0, idx m1) {
    k.gemm_tn(m1 - m0, N, K, A + m0, lda, B, ldb, C + m0 * ldc, ldc, accum);
  });
}

}  // namespace rkiqt::kern
