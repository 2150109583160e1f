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

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "rkiqt/cli/config.hpp"
#include "rkiqt/core/checkpoint.hpp"
#include "rkiqt/distill/losses.hpp"
#include "rkiqt/eval/evaluate.hpp"
#include "rkiqt/student/student.hpp"
#include "rkiqt/teachers/teachers.hpp"
#include "rkiqt/train/optimizer.hpp"

namespace rkiqt::train {

// Borrowed, frozen teachers. Absent pointers disable the matching loss.
struct TeacherSet {
  const teachers::NarTeacher* nar = nullptr;
  const teachers::BiasTeacher* conv = nullptr;
  const teachers::BiasTeacher* inv = nullptr;
};

struct StepLosses {
  Tensor total;       // gt + lambda1 * feature + lambda2 * logits
  Tensor inter_conv;  // pseudo-label losses; undefined when disabled
  Tensor inter_inv;
  distill::LossReport report;
};

struct EpochRow {
  int epoch = 0;
  double lr = 0;
  double mean_train_loss = 0;
  double val_srcc = 0;
  double val_plcc = 0;
};

struct RunOutput {
  Checkpoint best;  // by validation SRCC
  Checkpoint last;
  std::vector<EpochRow> epoch_rows;
  std::string step_csv;  // step,l_gt,l_feature,l_logits,l_inter_conv,l_inter_inv,l_total
  double best_val_srcc = -2;
  double final_val_srcc = 0;
  double final_val_plcc = 0;
  bool diverged = false;
};

// Owns the student, the distillation machinery and both optimizer groups.
class DistillationTrainer {
 public:
  DistillationTrainer(const cli::RunConfig& cfg, TeacherSet teachers,
                      double mos_min, double mos_max);

  // pixels standardized [B,3,S,S]; mos on the native label scale;
  // ref_pixels may be undefined when the reference path is off.
  StepLosses compute_losses(const Tensor& pixels,
                            const std::vector<double>& mos,
                            const Tensor& ref_pixels, std::uint64_t step);

  // backward over every enabled loss, clip, step both parameter groups
  void apply_step(StepLosses& losses);

  void set_lr(double lr);

  RunOutput run(const data::DatasetManifest& train_set,
                const data::DatasetManifest& val_set,
                const data::ReferencePool& refs);

  student::StudentModel& student() { return student_; }
  distill::McdParams& mcd_params() { return mcd_; }
  teachers::InterLayer* inter_conv() { return il_conv_.get(); }
  teachers::InterLayer* inter_inv() { return il_inv_.get(); }

  std::vector<Tensor> main_group() const;   // student + align + generate
  std::vector<Tensor> inter_group() const;  // both intermediate layers

  Checkpoint snapshot() const;  // all components, tagged; config + rng filled

 private:
  bool nar_enabled() const { return teachers_.nar && !cfg_.no_nar; }
  bool regular_enabled() const {
    return teachers_.conv && teachers_.inv && !cfg_.no_regular;
  }

  cli::RunConfig cfg_;
  TeacherSet teachers_;
  student::StudentModel student_;
  distill::McdParams mcd_;
  std::unique_ptr<teachers::InterLayer> il_conv_, il_inv_;
  AdamW opt_main_, opt_inter_;
  double mos_min_, mos_max_;
  std::uint64_t mask_base_seed_ = 0;
};

// Teacher pretraining: plain L1 regression to the normalized label with the
// same schedule family; returns a frozen checkpoint (tagged by kind).
Checkpoint pretrain_bias_teacher(teachers::BiasKind kind,
                                 const cli::RunConfig& cfg,
                                 const data::DatasetManifest& train_set,
                                 const data::DatasetManifest& val_set);

Checkpoint pretrain_nar_teacher(const cli::RunConfig& cfg,
                                const data::DatasetManifest& train_set,
                                const data::DatasetManifest& val_set,
                                const data::ReferencePool& refs);

// Shared helper: normalized target in [0,1].
double normalize_mos(double mos, double mos_min, double mos_max);

}  // namespace rkiqt::train
