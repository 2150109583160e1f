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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rkiqt/core/rng.hpp"
#include "rkiqt/eval/metrics.hpp"

using namespace rkiqt;
using namespace rkiqt::eval;

TEST_CASE("srcc on hand-checked orderings") {
  CHECK(srcc({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
  CHECK(srcc({1, 2, 3}, {30, 20, 10}) == doctest::Approx(-1.0));
  // ranks (1,2,3) vs (3,1,2): d = (-2,1,1), 1 - 6*6/(3*8) = -0.5
  CHECK(srcc({1, 2, 3}, {3, 1, 2}) == doctest::Approx(-0.5));
}

TEST_CASE("plcc on exact linear relations") {
  CHECK(plcc({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(plcc({1, 2, 3}, {-1, -2, -3}) == doctest::Approx(-1.0));
}

TEST_CASE("metrics match the independent oracles on random vectors") {
  Rng rng(90);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + std::size_t(rng.uniform_int(40));
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    CHECK(std::fabs(plcc(a, b) - oracle::pearson_reference(a, b)) < 1e-9);
    CHECK(std::fabs(srcc(a, b) - oracle::srcc_reference(a, b)) < 1e-9);
  }
}

TEST_CASE("srcc invariant under strictly monotone transforms") {
  Rng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + std::size_t(rng.uniform_int(30));
    std::vector<double> pred(n), gt(n);
    for (auto& v : pred) v = rng.normal();
    for (auto& v : gt) v = rng.normal();
    const double base = srcc(pred, gt);

    auto mapped = pred;
    for (auto& v : mapped) v = 3.0 * v + 7.0;  // affine positive
    CHECK(srcc(mapped, gt) == doctest::Approx(base));
    mapped = pred;
    for (auto& v : mapped) v = std::exp(v);
    CHECK(srcc(mapped, gt) == doctest::Approx(base));
    mapped = pred;
    for (auto& v : mapped) v = v * v * v;
    CHECK(srcc(mapped, gt) == doctest::Approx(base));
  }
}

TEST_CASE("plcc affine invariance and sign flip") {
  Rng rng(92);
  std::vector<double> pred(25), gt(25);
  for (auto& v : pred) v = rng.normal();
  for (auto& v : gt) v = rng.normal();
  const double base = plcc(pred, gt);
  auto scaled = pred;
  for (auto& v : scaled) v = 2.5 * v - 11.0;
  CHECK(plcc(scaled, gt) == doctest::Approx(base));
  auto negated = pred;
  for (auto& v : negated) v = -v;
  CHECK(plcc(negated, gt) == doctest::Approx(-base));
}

TEST_CASE("metric error codes") {
  auto code_of = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Err::Internal;
  };
  CHECK(code_of([] { (void)srcc({1, 2}, {1, 2, 3}); }) == Err::LengthMismatch);
  CHECK(code_of([] { (void)srcc({1, 2}, {1, 2}); }) == Err::TooFewSamples);
  CHECK(code_of([] { (void)plcc({1, 1, 1}, {1, 2, 3}); }) == Err::ConstantInput);
  CHECK(code_of([] { (void)srcc({1, 1, 1}, {1, 2, 3}); }) == Err::ConstantInput);
}

TEST_CASE("average ranks handle ties fractionally") {
  const auto r = average_ranks({10, 20, 20, 30});
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(2.5));
  CHECK(r[2] == doctest::Approx(2.5));
  CHECK(r[3] == doctest::Approx(4.0));
}

TEST_CASE("logistic4 remap preserves ranks and helps plcc on sigmoidal data") {
  Rng rng(93);
  std::vector<double> pred(40), gt(40);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.uniform(-3, 3);
    gt[i] = 10.0 / (1.0 + std::exp(-2.0 * pred[i])) + 0.01 * rng.normal();
  }
  const auto mapped = logistic4_fit(pred, gt);
  CHECK(srcc(mapped, gt) == doctest::Approx(srcc(pred, gt)).epsilon(1e-9));
  CHECK(plcc(mapped, gt) >= plcc(pred, gt) - 1e-9);
}
