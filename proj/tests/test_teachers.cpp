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
#include "rkiqt/teachers/teachers.hpp"
#include "testing_util.hpp"

using namespace rkiqt;
using namespace rkiqt::teachers;
using testing::random_tensor;

namespace {

NarTeacherConfig mini_nar() {
  NarTeacherConfig cfg;
  cfg.dim = 16;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.extractor_widths = {8, 12};
  return cfg;
}

}  // namespace

TEST_CASE("bias teacher: three taps with strictly decreasing resolution") {
  Rng rng(11);
  BiasTeacherConfig cfg;
  BiasTeacher teacher(cfg, rng);
  Tensor x = random_tensor({2, 3, 64, 64}, rng, 0.5);
  const auto out = teacher.forward(x);
  REQUIRE(out.taps.size() == 3);
  CHECK(out.taps[0].dim(2) > out.taps[1].dim(2));
  CHECK(out.taps[1].dim(2) > out.taps[2].dim(2));
  CHECK(out.y_prime.shape() == Shape{2});
  CHECK(teacher.tap_channels() == std::vector<int>{16, 32, 48});
}

TEST_CASE("conv and inv teachers disagree on random inputs") {
  Rng rng(12);
  BiasTeacherConfig ccfg;
  BiasTeacherConfig icfg;
  icfg.kind = BiasKind::kInv;
  BiasTeacher conv_teacher(ccfg, rng);
  BiasTeacher inv_teacher(icfg, rng);
  int distinct = 0;
  for (int t = 0; t < 10; ++t) {
    Tensor x = random_tensor({1, 3, 64, 64}, rng, 0.5);
    const auto a = conv_teacher.forward(x);
    const auto b = inv_teacher.forward(x);
    if (std::fabs(a.y_prime.data()[0] - b.y_prime.data()[0]) > 1e-9) ++distinct;
  }
  CHECK(distinct == 10);
}

TEST_CASE("nar teacher: per-layer targets sized to the student grid") {
  Rng rng(13);
  auto cfg = mini_nar();
  NarTeacher teacher(cfg, rng);
  Tensor lq = random_tensor({2, 3, 32, 32}, rng, 0.5);
  Tensor hq = random_tensor({2, 3, 32, 32}, rng, 0.5);
  const auto out = teacher.forward(lq, hq);
  REQUIRE(out.layer_feats.size() == 2);
  for (const auto& f : out.layer_feats)
    CHECK(f.shape() == Shape{2, 16, 16});  // n = (32/8)^2 tokens
  CHECK(out.y.shape() == Shape{2});

  // degenerate aligned case: hq == lq still runs and stays finite
  const auto same = teacher.forward(lq, lq);
  for (double v : same.y.data()) CHECK(std::isfinite(v));
}

TEST_CASE("nar teacher is sensitive to the chosen reference") {
  Rng rng(14);
  auto cfg = mini_nar();
  NarTeacher teacher(cfg, rng);
  Tensor lq = random_tensor({1, 3, 32, 32}, rng, 0.5);
  const auto base = teacher.forward(lq, random_tensor({1, 3, 32, 32}, rng, 0.5));
  int changed = 0;
  for (int t = 0; t < 10; ++t) {
    Tensor hq = random_tensor({1, 3, 32, 32}, rng, 0.5);
    const auto out = teacher.forward(lq, hq);
    double diff = 0;
    for (std::size_t i = 0; i < out.layer_feats[0].data().size(); ++i)
      diff += std::fabs(out.layer_feats[0].data()[i] -
                        base.layer_feats[0].data()[i]);
    if (diff > 1e-6) ++changed;
  }
  CHECK(changed == 10);
}

TEST_CASE("nar teacher rejects a missing reference") {
  Rng rng(15);
  NarTeacher teacher(mini_nar(), rng);
  Tensor lq = random_tensor({1, 3, 32, 32}, rng, 0.5);
  CHECK_THROWS_AS((void)teacher.forward(lq, Tensor()), Error);
}

TEST_CASE("inter layer: zero taps with zero biases give exactly zero") {
  Rng rng(16);
  InterLayer layer({4, 8, 12}, 8, rng);
  // the head bias defaults to the label mean; zero it for the null check
  for (auto& [name, t] : layer.named_params("il"))
    if (name == "il.mlp.b2") std::fill(t.data().begin(), t.data().end(), 0.0);
  std::vector<Tensor> taps = {Tensor::zeros({2, 4, 8, 8}),
                              Tensor::zeros({2, 8, 4, 4}),
                              Tensor::zeros({2, 12, 2, 2})};
  Tensor y = layer.forward(taps);
  CHECK(y.shape() == Shape{2});
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("inter layer gradient check on the first adapter") {
  Rng rng(17);
  InterLayer layer({4, 6, 8}, 8, rng);
  std::vector<Tensor> taps = {random_tensor({1, 4, 8, 8}, rng),
                              random_tensor({1, 6, 4, 4}, rng),
                              random_tensor({1, 8, 2, 2}, rng)};
  Tensor a0w, a0b;
  for (auto& [name, t] : layer.named_params("il")) {
    if (name == "il.a0.w") a0w = t;
    if (name == "il.a0.b") a0b = t;
  }
  const double worst = testing::check_gradients(
      [&] { return reshape(layer.forward(taps), {1}); }, {a0w, a0b}, 24, rng);
  CHECK(worst < 1e-4);
}

TEST_CASE("teacher checkpoints restore the exact forward") {
  Rng rng(18);
  BiasTeacherConfig cfg;
  cfg.kind = BiasKind::kInv;
  BiasTeacher teacher(cfg, rng);
  Checkpoint ck;
  teacher.save(ck);
  BiasTeacher restored = BiasTeacher::from_checkpoint(ck, cfg);
  CHECK(restored.trained());

  NoGradGuard guard;
  Tensor x = random_tensor({1, 3, 64, 64}, rng, 0.5);
  CHECK(teacher.forward(x).y_prime.data() ==
        restored.forward(x).y_prime.data());
}
