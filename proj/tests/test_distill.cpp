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
#include "rkiqt/distill/losses.hpp"
#include "testing_util.hpp"

using namespace rkiqt;
using namespace rkiqt::distill;
using testing::random_tensor;

namespace {

// G becomes the identity for non-negative inputs: both convs pass the
// center tap per channel, ReLU in between is inert on x >= 0.
void make_identity_generate(ops::GenerateParams& gen, int channels) {
  auto delta = [&](Tensor& w) {
    std::fill(w.data().begin(), w.data().end(), 0.0);
    for (int c = 0; c < channels; ++c)
      w.data()[std::size_t(((c * channels + c) * 3 + 1) * 3 + 1)] = 1.0;
  };
  delta(gen.w1);
  delta(gen.w2);
  std::fill(gen.b1.data().begin(), gen.b1.data().end(), 0.0);
  std::fill(gen.b2.data().begin(), gen.b2.data().end(), 0.0);
}

}  // namespace

TEST_CASE("tap mapping: identity when depths match, nearest otherwise") {
  CHECK(tap_mapping(4, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(tap_mapping(2, 4) == std::vector<std::size_t>{1, 3});
  CHECK(tap_mapping(4, 2) == std::vector<std::size_t>{0, 0, 1, 1});
}

TEST_CASE("mcd loss vanishes for identity pipeline on equal features") {
  Rng rng(31);
  const int D = 4;
  McdParams params = McdParams::init(D, D, rng);
  params.align = ops::AlignParams::identity(D);
  make_identity_generate(params.gen, D);

  // non-negative features so ReLU inside G is inert
  Tensor feats = random_tensor({2, 16, D}, rng);
  for (auto& v : feats.data()) v = std::fabs(v);
  std::vector<Tensor> student = {feats};
  std::vector<Tensor> teacher = {feats.detach()};

  ops::MaskSpec spec;
  spec.ratio = 0.0;
  Tensor loss = mcd_loss(student, teacher, spec, params);
  CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mcd loss is non-negative and penalizes mismatch") {
  Rng rng(32);
  McdParams params = McdParams::init(6, 4, rng);
  std::vector<Tensor> student = {random_tensor({2, 16, 6}, rng)};
  std::vector<Tensor> teacher = {random_tensor({2, 16, 4}, rng)};
  ops::MaskSpec spec;
  spec.ratio = 0.5;
  spec.seed = 9;
  Tensor loss = mcd_loss(student, teacher, spec, params);
  CHECK(loss.item() > 0.0);
}

TEST_CASE("mcd loss matches a from-scratch pipeline computation") {
  // single layer, 1 x (2x2 grid) x 2 dims, recomputed with plain loops
  Rng rng(33);
  const int Ds = 2, Dt = 2, g = 2;
  McdParams params = McdParams::init(Ds, Dt, rng);
  Tensor student_tap = random_tensor({1, g * g, Ds}, rng);
  Tensor teacher_tap = random_tensor({1, g * g, Dt}, rng);
  ops::MaskSpec spec;
  spec.ratio = 0.5;
  spec.seed = 123;

  Tensor loss = mcd_loss({student_tap}, {teacher_tap}, spec, params, true);

  // oracle: align -> mask -> grid -> conv/relu/conv -> normalized sq error
  ops::MaskSpec elem = spec;
  elem.seed = derive_seed(spec.seed, "mcd_mask", 0);
  const auto mask = ops::make_mask(g * g, elem);

  std::vector<double> aligned(std::size_t(g * g) * Dt);
  for (int t = 0; t < g * g; ++t)
    for (int d = 0; d < Dt; ++d) {
      double acc = params.align.b.data()[std::size_t(d)];
      for (int k = 0; k < Ds; ++k)
        acc += student_tap.data()[std::size_t(t * Ds + k)] *
               params.align.w.data()[std::size_t(k * Dt + d)];
      aligned[std::size_t(t * Dt + d)] =
          mask[std::size_t(t)] ? params.mask_embed.data()[std::size_t(d)] : acc;
    }
  // tokens -> grid [Dt, g, g]
  std::vector<double> grid(std::size_t(Dt) * g * g);
  for (int t = 0; t < g * g; ++t)
    for (int d = 0; d < Dt; ++d)
      grid[std::size_t(d * g * g + t)] = aligned[std::size_t(t * Dt + d)];
  auto h = oracle::conv2d_reference(grid, 1, Dt, g, g, params.gen.w1.data(),
                                    params.gen.b1.data(), Dt, 3, 1, 1);
  for (auto& v : h) v = std::max(0.0, v);
  auto gen = oracle::conv2d_reference(h, 1, Dt, g, g, params.gen.w2.data(),
                                      params.gen.b2.data(), Dt, 3, 1, 1);
  double expected = 0;
  for (int t = 0; t < g * g; ++t)
    for (int d = 0; d < Dt; ++d) {
      const double target = teacher_tap.data()[std::size_t(t * Dt + d)];
      const double diff = gen[std::size_t(d * g * g + t)] - target;
      expected += diff * diff;
    }
  expected /= double(Dt * g * g);  // one image, normalized by element count

  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("drd: zero on equal features, equals mcd with ratio 0 + identity G") {
  Rng rng(34);
  const int D = 4;
  McdParams params = McdParams::init(D, D, rng);
  params.align = ops::AlignParams::identity(D);
  Tensor feats = random_tensor({2, 16, D}, rng);
  CHECK(drd_loss({feats}, {feats.detach()}, params.align).item() ==
        doctest::Approx(0.0));

  make_identity_generate(params.gen, D);
  Tensor student = random_tensor({1, 16, D}, rng);
  for (auto& v : student.data()) v = std::fabs(v);
  Tensor teacher = random_tensor({1, 16, D}, rng);
  ops::MaskSpec spec;
  spec.ratio = 0.0;
  const double via_mcd = mcd_loss({student}, {teacher}, spec, params).item();
  const double via_drd = drd_loss({student}, {teacher}, params.align).item();
  CHECK(via_mcd == doctest::Approx(via_drd).epsilon(1e-12));

  CHECK(drd_loss({student}, {teacher}, params.align).item() > 0.0);
}

TEST_CASE("student logit loss values") {
  CHECK(student_logit_loss(Tensor::from({1}, {1.0}), Tensor::from({1}, {1.0}))
            .item() == doctest::Approx(0.0));
  CHECK(student_logit_loss(Tensor::from({1}, {1.0}), Tensor::from({1}, {3.5}))
            .item() == doctest::Approx(2.5));
  CHECK(student_logit_loss(Tensor::from({2}, {0.0, 2.0}),
                           Tensor::from({2}, {1.0, 1.0}))
            .item() == doctest::Approx(1.0));
}

TEST_CASE("inter layer loss values and flat interval") {
  auto t = [](double v) { return Tensor::from({1}, {v}); };
  CHECK(inter_layer_loss(t(2.0), t(2.0), t(2.0)).item() == doctest::Approx(0.0));
  CHECK(inter_layer_loss(t(2.0), t(1.0), t(5.0)).item() == doctest::Approx(4.0));

  // |y-a| + |y-b| is constant on [min(a,b), max(a,b)]: sweep confirms
  const double a = 1.0, b = 5.0;
  double lo = 1e9, hi = -1e9;
  for (double y = a; y <= b; y += 0.25) {
    const double v = inter_layer_loss(t(y), t(a), t(b)).item();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 1e-12);
  CHECK(inter_layer_loss(t(0.0), t(a), t(b)).item() > hi);
  CHECK(inter_layer_loss(t(6.0), t(a), t(b)).item() > hi);
}

TEST_CASE("stop-gradients: logit loss never reaches the pseudo-label source") {
  Rng rng(35);
  Tensor y_student = random_tensor({4}, rng, 1.0, true);
  Tensor y_pseudo = random_tensor({4}, rng, 1.0, true);
  backward(student_logit_loss(y_student, y_pseudo));
  CHECK(y_student.has_grad());
  CHECK_FALSE(y_pseudo.has_grad());

  Tensor y_inter = random_tensor({4}, rng, 1.0, true);
  Tensor y_prime = random_tensor({4}, rng, 1.0, true);
  Tensor y_s2 = random_tensor({4}, rng, 1.0, true);
  backward(inter_layer_loss(y_inter, y_prime, y_s2));
  CHECK(y_inter.has_grad());
  CHECK_FALSE(y_prime.has_grad());
  CHECK_FALSE(y_s2.has_grad());
}

TEST_CASE("total loss composition and weight scaling") {
  Tensor l_gt = Tensor::from({1}, {0.4});
  Tensor l_feat = Tensor::from({1}, {2.0});
  Tensor l_log = Tensor::from({1}, {0.3});
  LossWeights w{0.5, 2.0};
  CHECK(combine_total(l_gt, l_feat, l_log, w).item() ==
        doctest::Approx(0.4 + 0.5 * 2.0 + 2.0 * 0.3));
  CHECK(combine_total(l_gt, Tensor(), Tensor(), w).item() ==
        doctest::Approx(0.4));
  // lambda1 = lambda2 = 0 collapses to the gt term
  CHECK(combine_total(l_gt, l_feat, l_log, LossWeights{0, 0}).item() ==
        doctest::Approx(0.4));

  // monotone in lambda1 while l_feature > 0
  double prev = combine_total(l_gt, l_feat, l_log, LossWeights{0.1, 1}).item();
  for (double lam : {0.5, 1.0, 2.0}) {
    const double cur =
        combine_total(l_gt, l_feat, l_log, LossWeights{lam, 1}).item();
    CHECK(cur > prev);
    prev = cur;
  }

  CHECK_THROWS_AS(
      (void)combine_total(l_gt, l_feat, l_log, LossWeights{-1.0, 0.0}), Error);
}

TEST_CASE("mcd gradient reaches align, generate and the mask embedding") {
  Rng rng(36);
  McdParams params = McdParams::init(4, 4, rng);
  Tensor student = random_tensor({1, 16, 4}, rng, 1.0, true);
  Tensor teacher = random_tensor({1, 16, 4}, rng);
  ops::MaskSpec spec;
  spec.ratio = 0.5;
  spec.seed = 4;
  const double worst = testing::check_gradients(
      [&] { return mcd_loss({student}, {teacher}, spec, params); },
      {student, params.align.w, params.align.b, params.gen.w1, params.gen.w2,
       params.mask_embed},
      25, rng);
  CHECK(worst < 1e-4);
}
