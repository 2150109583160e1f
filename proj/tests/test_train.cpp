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
#include <filesystem>

#include "doctest.h"
#include "rkiqt/cli/commands.hpp"
#include "rkiqt/data/synth.hpp"
#include "rkiqt/train/ablation.hpp"
#include "rkiqt/train/trainer.hpp"

using namespace rkiqt;
using namespace rkiqt::train;

namespace {

cli::RunConfig mini_cfg() {
  cli::RunConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.dim = 16;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.teacher_dim = 16;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.crops_train = 1;
  cfg.crops_eval = 2;
  cfg.val_crops = 1;
  cfg.teacher_crops = 1;
  cfg.seed = 5;
  return cfg;
}

struct MiniData {
  data::SynthResult synth;
  data::SplitResult parts;
};

const MiniData& mini_data() {
  static const MiniData d = [] {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("rkiqt_train_test_" + std::to_string(++counter));
    data::SynthConfig sc;
    sc.bases = 4;
    sc.levels = 3;
    sc.families = {"blur", "noise"};
    sc.base_size = 48;
    sc.seed = 3;
    MiniData out;
    out.synth = data::synthesize_toy_dataset(sc, dir.string());
    out.parts = data::split(out.synth.manifest, {0.75, 0, 5});
    return out;
  }();
  return d;
}

struct MiniTeachers {
  teachers::NarTeacher nar;
  teachers::BiasTeacher conv{};
  teachers::BiasTeacher inv{};
};

MiniTeachers make_mini_teachers(const cli::RunConfig& cfg) {
  Rng rng(9);
  MiniTeachers t;
  t.nar = teachers::NarTeacher(cfg.nar_config(), rng);
  t.conv = teachers::BiasTeacher(cfg.bias_config(teachers::BiasKind::kConv), rng);
  t.inv = teachers::BiasTeacher(cfg.bias_config(teachers::BiasKind::kInv), rng);
  t.nar.set_frozen();
  t.conv.set_frozen();
  t.inv.set_frozen();
  return t;
}

std::vector<Scalar> flatten(const ops::NamedParams& params) {
  std::vector<Scalar> out;
  for (const auto& [name, t] : params)
    out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TEST_CASE("lr schedule is exactly lr0 / factor^(epoch/every)") {
  const double expected[9] = {2e-4, 2e-4, 2e-4, 2e-5, 2e-5,
                              2e-5, 2e-6, 2e-6, 2e-6};
  for (int e = 0; e < 9; ++e)
    CHECK(scheduled_lr(2e-4, 10.0, 3, e) == doctest::Approx(expected[e]).epsilon(1e-12));
}

TEST_CASE("adamw drives a quadratic to its minimum; clip bounds the norm") {
  Tensor p = Tensor::from({2}, {5.0, -3.0}, true);
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamW opt({p}, cfg);
  for (int i = 0; i < 300; ++i) {
    opt.zero_grad();
    backward(sum_all(square(p)));
    opt.step();
  }
  CHECK(std::fabs(p.data()[0]) < 1e-2);
  CHECK(std::fabs(p.data()[1]) < 1e-2);

  Tensor q = Tensor::from({3}, {0.0, 0.0, 0.0}, true);
  q.grad() = {30.0, 40.0, 0.0};
  const double pre = clip_global_norm({q}, 1.0);
  CHECK(pre == doctest::Approx(50.0));
  double post = 0;
  for (double g : q.node()->grad) post += g * g;
  CHECK(std::sqrt(post) == doctest::Approx(1.0));
}

TEST_CASE("gradient boundaries: teachers frozen, losses update disjoint groups") {
  auto cfg = mini_cfg();
  const auto& d = mini_data();
  auto teachers = make_mini_teachers(cfg);
  TeacherSet set{&teachers.nar, &teachers.conv, &teachers.inv};
  DistillationTrainer trainer(cfg, set, 0.0, 100.0);

  Rng crop_rng(1);
  eval::ImageCache cache;
  std::vector<data::PatchBatch> parts, refs;
  for (int i = 0; i < 4; ++i) {
    const auto& rec = d.parts.train.records[std::size_t(i)];
    parts.push_back(data::crop_patches(cache.get(rec.path), rec.id, rec.mos, 1,
                                       32, crop_rng));
    refs.push_back(data::crop_patches(cache.get(d.synth.refs.paths[0]), "r",
                                      0.0, 1, 32, crop_rng));
  }
  auto batch = data::concat_batches(parts);
  Tensor px = data::normalize_pixels(batch.pixels, cfg.pixel_norm());
  Tensor rx = data::normalize_pixels(data::concat_batches(refs).pixels,
                                     cfg.pixel_norm());

  const auto teacher_before = flatten(teachers.nar.named_params());
  const auto conv_before = flatten(teachers.conv.named_params());

  // (a) step driven by the student objective only: intermediate layers hold
  auto main_group = trainer.main_group();
  auto inter_group = trainer.inter_group();
  const auto inter_before = flatten(trainer.inter_conv()->named_params("x"));
  {
    auto losses = trainer.compute_losses(px, batch.mos, rx, 0);
    for (auto& p : main_group) p.zero_grad();
    for (auto& p : inter_group) p.zero_grad();
    backward(losses.total);
    AdamWConfig oc;
    oc.lr = 1e-3;
    AdamW opt_inter(inter_group, oc);
    opt_inter.step();  // no grads flowed; params must not move
  }
  CHECK(flatten(trainer.inter_conv()->named_params("x")) == inter_before);

  // (b) step driven by the pseudo-label losses only: student holds
  const auto student_before = flatten(trainer.student().named_params());
  {
    auto losses = trainer.compute_losses(px, batch.mos, rx, 1);
    for (auto& p : main_group) p.zero_grad();
    for (auto& p : inter_group) p.zero_grad();
    backward(add(losses.inter_conv, losses.inter_inv));
    AdamWConfig oc;
    oc.lr = 1e-3;
    AdamW opt_main(main_group, oc);
    opt_main.step();
  }
  CHECK(flatten(trainer.student().named_params()) == student_before);

  // (c) a full combined step never touches the frozen teachers
  {
    auto losses = trainer.compute_losses(px, batch.mos, rx, 2);
    trainer.apply_step(losses);
  }
  CHECK(flatten(teachers.nar.named_params()) == teacher_before);
  CHECK(flatten(teachers.conv.named_params()) == conv_before);
}

TEST_CASE("loss report identity and composition") {
  auto cfg = mini_cfg();
  const auto& d = mini_data();
  auto teachers = make_mini_teachers(cfg);
  TeacherSet set{&teachers.nar, &teachers.conv, &teachers.inv};
  DistillationTrainer trainer(cfg, set, 0.0, 100.0);

  Rng crop_rng(2);
  eval::ImageCache cache;
  std::vector<data::PatchBatch> parts, refs;
  for (int i = 0; i < 3; ++i) {
    const auto& rec = d.parts.train.records[std::size_t(i)];
    parts.push_back(data::crop_patches(cache.get(rec.path), rec.id, rec.mos, 1,
                                       32, crop_rng));
    refs.push_back(data::crop_patches(cache.get(d.synth.refs.paths[0]), "r",
                                      0.0, 1, 32, crop_rng));
  }
  auto batch = data::concat_batches(parts);
  Tensor px = data::normalize_pixels(batch.pixels, cfg.pixel_norm());
  Tensor rx = data::normalize_pixels(data::concat_batches(refs).pixels,
                                     cfg.pixel_norm());
  const auto losses = trainer.compute_losses(px, batch.mos, rx, 0);
  const auto& r = losses.report;
  CHECK(std::fabs(r.l_total -
                  (r.l_gt + cfg.lambda1 * r.l_feature + cfg.lambda2 * r.l_logits)) <
        1e-6);
  CHECK(r.l_feature >= 0.0);
}

TEST_CASE("deterministic mode: identical runs bit for bit") {
  auto cfg = mini_cfg();
  const auto& d = mini_data();

  auto run_once = [&] {
    auto teachers = make_mini_teachers(cfg);
    TeacherSet set{&teachers.nar, &teachers.conv, &teachers.inv};
    DistillationTrainer trainer(cfg, set, d.synth.manifest.mos_min(),
                                d.synth.manifest.mos_max());
    return trainer.run(d.parts.train, d.parts.test, d.synth.refs);
  };
  const auto a = run_once();
  const auto b = run_once();
  CHECK(a.final_val_srcc == b.final_val_srcc);  // exact, not approximate
  CHECK(a.step_csv == b.step_csv);
  REQUIRE(a.epoch_rows.size() == b.epoch_rows.size());
  for (std::size_t i = 0; i < a.epoch_rows.size(); ++i)
    CHECK(a.epoch_rows[i].val_srcc == b.epoch_rows[i].val_srcc);

  // checkpoint of the run round-trips bit-exactly through a file
  auto dir = std::filesystem::temp_directory_path() / "rkiqt_run_ck";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.ckpt").string();
  a.last.save(path);
  const Checkpoint back = Checkpoint::load(path);
  for (const auto& [name, e] : a.last.arrays)
    CHECK(back.arrays.at(name).data == e.data);
}

TEST_CASE("disabling both teacher paths zeroes their loss terms") {
  auto cfg = mini_cfg();
  cfg.no_nar = true;
  cfg.no_regular = true;
  const auto& d = mini_data();
  DistillationTrainer trainer(cfg, TeacherSet{}, 0.0, 100.0);

  Rng crop_rng(3);
  eval::ImageCache cache;
  const auto& rec = d.parts.train.records[0];
  auto batch = data::crop_patches(load_image(rec.path), rec.id, rec.mos,
                                  4, 32, crop_rng);
  Tensor px = data::normalize_pixels(batch.pixels, cfg.pixel_norm());
  const auto losses = trainer.compute_losses(px, batch.mos, Tensor(), 0);
  CHECK(losses.report.l_feature == 0.0);
  CHECK(losses.report.l_logits == 0.0);
  CHECK(losses.report.l_total == doctest::Approx(losses.report.l_gt));
}

TEST_CASE("single experiment runs end to end on the mini system") {
  auto cfg = mini_cfg();
  cfg.no_nar = true;
  cfg.no_regular = true;
  cfg.epochs = 1;
  const auto& d = mini_data();
  const auto run =
      run_single_experiment(cfg, d.synth.manifest, d.synth.refs, TeacherSet{}, 0);
  CHECK_FALSE(run.diverged);
  CHECK(std::isfinite(run.srcc));
}
