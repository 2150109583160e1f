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

#include <vector>

#include "rkiqt/ops/mask.hpp"
#include "rkiqt/ops/mcd_modules.hpp"

namespace rkiqt::distill {

struct LossWeights {
  double lambda1 = 1.0;  // feature distillation
  double lambda2 = 1.0;  // logit regularization
};

struct LossReport {
  double l_gt = 0;
  double l_feature = 0;
  double l_logits = 0;
  double l_total = 0;
  std::vector<double> per_layer_feature;
  double l_inter_conv = 0;
  double l_inter_inv = 0;
};

// Shared across all tapped layers: one adapter, one generation module, one
// learnable fill row for masked tokens.
struct McdParams {
  ops::AlignParams align;
  ops::GenerateParams gen;
  Tensor mask_embed;  // [teacher_dim]

  static McdParams init(int student_dim, int teacher_dim, Rng& rng);
  ops::NamedParams align_named() const;     // tag "align"
  ops::NamedParams generate_named() const;  // tag "generate"
};

// Nearest-tap assignment of student layers onto teacher layers by relative
// depth; identity when depths match.
std::vector<std::size_t> tap_mapping(std::size_t student_layers,
                                     std::size_t teacher_layers);

// Masked feature distillation: per tapped layer, align -> mask (fill with
// the learnable embedding) -> regenerate -> squared Frobenius distance to
// the teacher tap, averaged over the batch (and element count when
// `normalized`); summed over layers. Teacher features are constants.
Tensor mcd_loss(const std::vector<Tensor>& student_feats,
                const std::vector<Tensor>& teacher_feats,
                const ops::MaskSpec& mask_spec, const McdParams& params,
                bool normalized = true,
                std::vector<double>* per_layer = nullptr);

// Unmasked baseline: align -> MSE against the teacher tap.
Tensor drd_loss(const std::vector<Tensor>& student_feats,
                const std::vector<Tensor>& teacher_feats,
                const ops::AlignParams& align_params, bool normalized = true,
                std::vector<double>* per_layer = nullptr);

// Batch-mean L1 toward the pseudo-label; no gradient reaches the
// intermediate layer through this loss.
Tensor student_logit_loss(const Tensor& y_student, const Tensor& y_pseudo);

// Pulls the pseudo-label toward both the frozen teacher and the student;
// gradient flows only into the intermediate layer.
Tensor inter_layer_loss(const Tensor& y_inter, const Tensor& y_teacher_prime,
                        const Tensor& y_student);

Tensor combine_total(const Tensor& l_gt, const Tensor& l_feature,
                     const Tensor& l_logits, const LossWeights& weights);

}  // namespace rkiqt::distill
