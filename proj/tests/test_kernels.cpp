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

// Equivalence of the active SIMD lane against the scalar reference.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "rkiqt/core/kernels.hpp"
#include "rkiqt/core/rng.hpp"

using namespace rkiqt;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-10});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

bool rel_close(double a, double b, double tol = 1e-12) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-10});
  return std::fabs(a - b) / denom < tol;
}

}  // namespace

TEST_CASE("active kernel lane matches scalar reference on gemm variants") {
  const auto& act = kern::active();
  const auto& ref = kern::scalar_kernels();
  INFO("active lane: ", act.name);

  Rng rng(42);
  const std::vector<std::array<kern::idx, 3>> sizes = {
      {1, 1, 1},   {3, 5, 7},    {4, 16, 8},  {8, 33, 17},
      {13, 64, 9}, {67, 67, 16}, {64, 48, 64}, {5, 130, 3}};

  for (auto [M, N, K] : sizes) {
    auto a = random_vec(std::size_t(M * K), rng);
    auto b = random_vec(std::size_t(K * N), rng);
    auto bt = random_vec(std::size_t(N * K), rng);
    auto at = random_vec(std::size_t(K * M), rng);
    std::vector<double> c0(std::size_t(M * N)), c1(std::size_t(M * N));

    ref.gemm_nn(M, N, K, a.data(), K, b.data(), N, c0.data(), N, false);
    act.gemm_nn(M, N, K, a.data(), K, b.data(), N, c1.data(), N, false);
    CHECK(max_rel_diff(c0, c1) < 1e-12);

    ref.gemm_nt(M, N, K, a.data(), K, bt.data(), K, c0.data(), N, false);
    act.gemm_nt(M, N, K, a.data(), K, bt.data(), K, c1.data(), N, false);
    CHECK(max_rel_diff(c0, c1) < 1e-12);

    ref.gemm_tn(M, N, K, at.data(), M, b.data(), N, c0.data(), N, false);
    act.gemm_tn(M, N, K, at.data(), M, b.data(), N, c1.data(), N, false);
    CHECK(max_rel_diff(c0, c1) < 1e-12);

    // accumulate mode
    auto seed = random_vec(std::size_t(M * N), rng);
    c0 = seed;
    c1 = seed;
    ref.gemm_nn(M, N, K, a.data(), K, b.data(), N, c0.data(), N, true);
    act.gemm_nn(M, N, K, a.data(), K, b.data(), N, c1.data(), N, true);
    CHECK(max_rel_diff(c0, c1) < 1e-12);
  }
}

TEST_CASE("active kernel lane matches scalar reference on vector ops") {
  const auto& act = kern::active();
  const auto& ref = kern::scalar_kernels();
  Rng rng(7);

  for (std::size_t n : {1u, 3u, 4u, 17u, 256u, 1001u}) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    std::vector<double> r0(n), r1(n);

    ref.vadd(n, a.data(), b.data(), r0.data());
    act.vadd(n, a.data(), b.data(), r1.data());
    CHECK(r0 == r1);

    ref.vsub(n, a.data(), b.data(), r0.data());
    act.vsub(n, a.data(), b.data(), r1.data());
    CHECK(r0 == r1);

    ref.vmul(n, a.data(), b.data(), r0.data());
    act.vmul(n, a.data(), b.data(), r1.data());
    CHECK(r0 == r1);

    ref.vrelu(n, a.data(), r0.data());
    act.vrelu(n, a.data(), r1.data());
    CHECK(r0 == r1);

    ref.vscale(n, 1.7, a.data(), r0.data());
    act.vscale(n, 1.7, a.data(), r1.data());
    CHECK(r0 == r1);

    r0 = b;
    r1 = b;
    ref.vaxpy(n, -0.3, a.data(), r0.data());
    act.vaxpy(n, -0.3, a.data(), r1.data());
    CHECK(max_rel_diff(r0, r1) < 1e-12);

    CHECK(rel_close(ref.vdot(n, a.data(), b.data()),
                    act.vdot(n, a.data(), b.data())));
    CHECK(rel_close(ref.vsum(n, a.data()), act.vsum(n, a.data())));
  }
}
