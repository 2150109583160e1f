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
#include "rkiqt/ops/involution.hpp"
#include "rkiqt/ops/mask.hpp"
#include "rkiqt/ops/mcd_modules.hpp"
#include "rkiqt/ops/stems.hpp"
#include "testing_util.hpp"

using namespace rkiqt;
using namespace rkiqt::ops;
using testing::check_gradients;
using testing::random_tensor;

TEST_CASE("involution matches the brute-force reference") {
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    InvolutionConfig cfg;
    cfg.kernel_size = (trial % 2) ? 5 : 3;
    cfg.stride = 1;
    cfg.groups = (trial % 3 == 0) ? 2 : 1;
    cfg.reduction = 4;
    const int C = 4, H = 8, W = 8;
    auto params = InvolutionParams::init(C, cfg, rng);
    Tensor x = random_tensor({1, C, H, W}, rng);

    Tensor out = involution(x, cfg, params);
    const auto ref =
        oracle::involution_reference(x.data(), 1, C, H, W, cfg, params);
    REQUIRE(out.data().size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(std::fabs(out.data()[i] - ref[i]) < 1e-6);
  }
}

TEST_CASE("involution stride 2 matches reference and halves spatial dims") {
  Rng rng(22);
  InvolutionConfig cfg;
  cfg.stride = 2;
  const int C = 4, H = 8, W = 8;
  auto params = InvolutionParams::init(C, cfg, rng);
  Tensor x = random_tensor({2, C, H, W}, rng);
  Tensor out = involution(x, cfg, params);
  CHECK(out.shape() == Shape{2, C, 4, 4});
  const auto ref = oracle::involution_reference(x.data(), 2, C, H, W, cfg, params);
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(std::fabs(out.data()[i] - ref[i]) < 1e-6);
}

TEST_CASE("center-delta kernel turns involution into the identity") {
  Rng rng(23);
  InvolutionConfig cfg;  // K=3, stride 1, groups 1
  const int C = 3, H = 6, W = 6;
  auto params = InvolutionParams::init(C, cfg, rng);
  // zero the expand layer and bias the center tap to 1
  std::fill(params.w_expand.data().begin(), params.w_expand.data().end(), 0.0);
  std::fill(params.b_expand.data().begin(), params.b_expand.data().end(), 0.0);
  params.b_expand.data()[4] = 1.0;  // center of the 3x3 kernel

  Tensor x = random_tensor({1, C, H, W}, rng);
  Tensor out = involution(x, cfg, params);
  for (std::size_t i = 0; i < x.data().size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("involution kernels are shared across channels within a group") {
  Rng rng(24);
  InvolutionConfig cfg;
  cfg.groups = 2;
  const int C = 4, H = 5, W = 5;
  auto params = InvolutionParams::init(C, cfg, rng);

  // channels of a group fed identical planes produce identical outputs
  Tensor x = Tensor::zeros({1, C, H, W});
  Rng fill(5);
  for (int i = 0; i < H * W; ++i) {
    const double a = fill.normal(), b = fill.normal();
    x.data()[std::size_t(0 * H * W + i)] = a;
    x.data()[std::size_t(1 * H * W + i)] = a;  // same group as channel 0
    x.data()[std::size_t(2 * H * W + i)] = b;
    x.data()[std::size_t(3 * H * W + i)] = b;
  }
  Tensor out = involution(x, cfg, params);
  const std::size_t plane = std::size_t(H) * W;
  for (std::size_t i = 0; i < plane; ++i) {
    CHECK(out.data()[i] == out.data()[plane + i]);
    CHECK(out.data()[2 * plane + i] == out.data()[3 * plane + i]);
  }

  // structurally one kernel per group per site
  Tensor ker = involution_kernels(x, cfg, params);
  CHECK(ker.dim(1) == 2);
}

TEST_CASE("involution channel/group mismatch is rejected") {
  Rng rng(25);
  InvolutionConfig cfg;
  cfg.groups = 3;
  CHECK_THROWS_AS((void)InvolutionParams::init(4, cfg, rng), Error);
}

TEST_CASE("involution gradient check") {
  Rng rng(26);
  InvolutionConfig cfg;
  const int C = 4;
  auto params = InvolutionParams::init(C, cfg, rng);
  Tensor x = random_tensor({1, C, 5, 5}, rng, 1.0, true);
  const double worst = check_gradients(
      [&] { return mean_all(square(involution(x, cfg, params))); },
      {x, params.w_reduce, params.b_reduce, params.w_expand, params.b_expand},
      25, rng);
  CHECK(worst < 1e-4);
}

TEST_CASE("conv stem: zero input with zero bias gives the zero vector") {
  Rng rng(27);
  StemConfig cfg;
  cfg.out_dim = 32;
  auto params = ConvStemParams::init(cfg, rng);
  Tensor zeros_in = Tensor::zeros({2, 3, 32, 32});
  Tensor out = conv_stem(zeros_in, cfg, params);
  CHECK(out.shape() == Shape{2, 32});
  for (double v : out.data()) CHECK(v == 0.0);

  auto iparams = InvStemParams::init(cfg, rng);
  Tensor iout = inv_stem(zeros_in, cfg, iparams);
  CHECK(iout.shape() == Shape{2, 32});
  for (double v : iout.data()) CHECK(v == 0.0);
}

TEST_CASE("conv and inv stems differ on random input") {
  Rng rng(28);
  StemConfig cfg;
  cfg.out_dim = 16;
  auto cparams = ConvStemParams::init(cfg, rng);
  auto iparams = InvStemParams::init(cfg, rng);
  int distinct = 0;
  for (int t = 0; t < 10; ++t) {
    Tensor x = random_tensor({1, 3, 32, 32}, rng, 0.5);
    Tensor a = conv_stem(x, cfg, cparams);
    Tensor b = inv_stem(x, cfg, iparams);
    double diff = 0;
    for (idx_t i = 0; i < a.numel(); ++i)
      diff += std::fabs(a.data()[std::size_t(i)] - b.data()[std::size_t(i)]);
    if (diff > 1e-6) ++distinct;
  }
  CHECK(distinct == 10);
}

TEST_CASE("stem output is more stable under stride translation than across images") {
  Rng rng(29);
  StemConfig cfg;
  cfg.out_dim = 16;
  auto params = ConvStemParams::init(cfg, rng);
  const int S = 40, shift = 8;  // total stem stride with 3 stages
  double d_translated = 0, d_unrelated = 0;
  const int trials = 8;
  for (int t = 0; t < trials; ++t) {
    Tensor big = random_tensor({1, 3, S + shift, S + shift}, rng, 0.5);
    auto window = [&](int oy, int ox) {
      Tensor w = Tensor::zeros({1, 3, S, S});
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < S; ++y)
          for (int x = 0; x < S; ++x)
            w.data()[std::size_t((c * S + y) * S + x)] =
                big.data()[std::size_t((c * (S + shift) + y + oy) * (S + shift) +
                                       x + ox)];
      return w;
    };
    Tensor a = conv_stem(window(0, 0), cfg, params);
    Tensor b = conv_stem(window(0, shift), cfg, params);
    Tensor c = conv_stem(random_tensor({1, 3, S, S}, rng, 0.5), cfg, params);
    for (idx_t i = 0; i < a.numel(); ++i) {
      d_translated += std::fabs(a.data()[std::size_t(i)] - b.data()[std::size_t(i)]);
      d_unrelated += std::fabs(a.data()[std::size_t(i)] - c.data()[std::size_t(i)]);
    }
  }
  CHECK(d_translated < d_unrelated);
}

TEST_CASE("make_mask endpoints and determinism") {
  for (auto policy : all_mask_policies()) {
    MaskSpec spec;
    spec.policy = policy;
    spec.seed = 77;

    spec.ratio = 0.0;
    const auto none = make_mask(16, spec);
    if (policy == MaskPolicy::kRandom || policy == MaskPolicy::kGaussianCenter ||
        policy == MaskPolicy::kGaussianEdge) {
      for (auto m : none) CHECK(m == 0);
    }

    if (policy == MaskPolicy::kRandom || policy == MaskPolicy::kGaussianCenter ||
        policy == MaskPolicy::kGaussianEdge) {
      spec.ratio = 1.0;
      const auto all = make_mask(16, spec);
      CHECK(std::count(all.begin(), all.end(), 1) == 16);
    }

    spec.ratio = 0.5;
    CHECK(make_mask(16, spec) == make_mask(16, spec));
  }
}

TEST_CASE("random mask frequency within binomial bounds") {
  MaskSpec spec;
  spec.ratio = 0.37;
  spec.seed = 5;
  const std::int64_t tokens = 196;
  const int draws = 2000;
  double total = 0;
  for (int d = 0; d < draws; ++d) {
    spec.seed = std::uint64_t(d);
    const auto m = make_mask(tokens, spec);
    total += double(std::count(m.begin(), m.end(), 1));
  }
  const double n = double(tokens) * draws;
  const double freq = total / n;
  const double sigma = std::sqrt(spec.ratio * (1 - spec.ratio) / n);
  CHECK(std::fabs(freq - spec.ratio) < 3 * sigma + 1e-12);
}

TEST_CASE("gaussian_center masks the center quartile more often than the edge") {
  // 14x14 grid, ratio 0.5, 10000 draws: compare mask frequency of the
  // central quartile of tokens (by distance to center) with the outer
  // quartile.
  const int g = 14;
  const std::int64_t tokens = g * g;
  std::vector<std::pair<double, int>> by_dist;
  const double c = (g - 1) / 2.0;
  for (int y = 0; y < g; ++y)
    for (int x = 0; x < g; ++x)
      by_dist.push_back({(y - c) * (y - c) + (x - c) * (x - c), y * g + x});
  std::sort(by_dist.begin(), by_dist.end());

  std::vector<double> hits(std::size_t(tokens), 0);
  MaskSpec spec;
  spec.policy = MaskPolicy::kGaussianCenter;
  spec.ratio = 0.5;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    spec.seed = std::uint64_t(d);
    const auto m = make_mask(tokens, spec);
    for (std::int64_t i = 0; i < tokens; ++i) hits[std::size_t(i)] += m[std::size_t(i)];
  }
  const std::size_t q = std::size_t(tokens) / 4;
  double center_freq = 0, edge_freq = 0;
  for (std::size_t i = 0; i < q; ++i) {
    center_freq += hits[std::size_t(by_dist[i].second)];
    edge_freq += hits[std::size_t(by_dist[by_dist.size() - 1 - i].second)];
  }
  center_freq /= double(q) * draws;
  edge_freq /= double(q) * draws;

  // binomial 3-sigma separation bound
  const double se = std::sqrt(0.5 * 0.5 / (double(q) * draws));
  CHECK(center_freq > edge_freq + 3 * se);

  // mean frequency still tracks the requested ratio
  double total = 0;
  for (double h : hits) total += h;
  CHECK(std::fabs(total / (double(tokens) * draws) - 0.5) < 0.02);
}

TEST_CASE("align: identity projection passes tokens through") {
  Rng rng(31);
  auto id = AlignParams::identity(8);
  Tensor x = random_tensor({2, 5, 8}, rng);
  Tensor out = align(x, id);
  CHECK(out.data() == x.data());

  auto proj = AlignParams::init(8, 12, rng);
  Tensor y = align(x, proj);
  CHECK(y.shape() == Shape{2, 5, 12});

  const double worst = check_gradients(
      [&] { return mean_all(square(align(x, proj))); }, {proj.w, proj.b}, 20,
      rng);
  CHECK(worst < 1e-4);
}

TEST_CASE("generate matches the loop-convolution oracle") {
  Rng rng(32);
  auto params = GenerateParams::init(2, rng);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  Tensor out = generate(x, params);
  CHECK(out.shape() == x.shape());

  auto h = oracle::conv2d_reference(x.data(), 1, 2, 4, 4, params.w1.data(),
                                    params.b1.data(), 2, 3, 1, 1);
  for (auto& v : h) v = std::max(0.0, v);
  const auto ref = oracle::conv2d_reference(h, 1, 2, 4, 4, params.w2.data(),
                                            params.b2.data(), 2, 3, 1, 1);
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(std::fabs(out.data()[i] - ref[i]) < 1e-6);
}

TEST_CASE("generate: zero input and zero bias give zero output; shape held") {
  Rng rng(33);
  for (int g : {4, 7, 14}) {
    auto params = GenerateParams::init(3, rng);
    std::fill(params.b1.data().begin(), params.b1.data().end(), 0.0);
    std::fill(params.b2.data().begin(), params.b2.data().end(), 0.0);
    Tensor x = Tensor::zeros({1, 3, g, g});
    Tensor out = generate(x, params);
    CHECK(out.shape() == Shape{1, 3, g, g});
    for (double v : out.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("token grid round trip and non-square rejection") {
  Rng rng(34);
  Tensor tokens = random_tensor({2, 16, 6}, rng);
  Tensor grid = tokens_to_grid(tokens);
  CHECK(grid.shape() == Shape{2, 6, 4, 4});
  Tensor back = grid_to_tokens(grid);
  CHECK(back.data() == tokens.data());

  Tensor bad = random_tensor({1, 15, 6}, rng);
  CHECK_THROWS_AS((void)tokens_to_grid(bad), Error);
}
