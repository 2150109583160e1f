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

#include "rkiqt/distill/losses.hpp"

#include <cmath>

#include "rkiqt/ops/transformer.hpp"

namespace rkiqt::distill {

McdParams McdParams::init(int student_dim, int teacher_dim, Rng& rng) {
  McdParams p;
  p.align = ops::AlignParams::init(student_dim, teacher_dim, rng);
  p.gen = ops::GenerateParams::init(teacher_dim, rng);
  p.mask_embed = ops::trunc_normal({teacher_dim}, rng);
  return p;
}

ops::NamedParams McdParams::align_named() const { return align.named("align"); }

ops::NamedParams McdParams::generate_named() const {
  auto out = gen.named("generate");
  out.emplace_back("generate.mask_embed", mask_embed);
  return out;
}

std::vector<std::size_t> tap_mapping(std::size_t student_layers,
                                     std::size_t teacher_layers) {
  check(student_layers > 0 && teacher_layers > 0, Err::InvalidArgument,
        "tap_mapping: zero layer count");
  std::vector<std::size_t> map(student_layers);
  for (std::size_t i = 0; i < student_layers; ++i) {
    const double rel = double(i + 1) / double(student_layers);
    const auto t = std::size_t(std::llround(rel * double(teacher_layers)));
    map[i] = std::min(teacher_layers - 1, std::max<std::size_t>(1, t) - 1);
  }
  return map;
}

namespace {

Tensor frob_mean(const Tensor& a, const Tensor& b, bool normalized) {
  // (1/K) sum_i ||a_i - b_i||_F^2, optionally / per-image element count
  const idx_t batch = a.dim(0);
  const idx_t per_image = a.numel() / batch;
  Tensor sq = sum_all(square(sub(a, b)));
  const double denom = normalized ? double(batch * per_image) : double(batch);
  return scale(sq, 1.0 / denom);
}

}  // namespace

Tensor mcd_loss(const std::vector<Tensor>& student_feats,
                const std::vector<Tensor>& teacher_feats,
                const ops::MaskSpec& mask_spec, const McdParams& params,
                bool normalized, std::vector<double>* per_layer) {
  check(!student_feats.empty() && !teacher_feats.empty(), Err::ShapeMismatch,
        "mcd_loss: no feature taps");
  const auto taps = tap_mapping(student_feats.size(), teacher_feats.size());

  Tensor total;
  if (per_layer) per_layer->clear();
  for (std::size_t i = 0; i < student_feats.size(); ++i) {
    const Tensor& s = student_feats[i];
    const Tensor& t = teacher_feats[taps[i]];
    check(s.ndim() == 3 && t.ndim() == 3 && s.dim(0) == t.dim(0) &&
              s.dim(1) == t.dim(1),
          Err::ShapeMismatch, "mcd_loss: tap shape mismatch at layer " +
                                  std::to_string(i));
    const idx_t B = s.dim(0), T = s.dim(1);

    Tensor aligned = ops::align(s, params.align);
    check(aligned.dim(2) == t.dim(2), Err::ShapeMismatch,
          "mcd_loss: aligned dim differs from teacher dim");

    // fresh mask per (layer, batch element)
    std::vector<std::uint8_t> mask;
    mask.reserve(std::size_t(B * T));
    for (idx_t b = 0; b < B; ++b) {
      ops::MaskSpec elem = mask_spec;
      elem.seed = derive_seed(mask_spec.seed, "mcd_mask",
                              std::uint64_t(i) * 100003 + std::uint64_t(b));
      const auto m = ops::make_mask(T, elem);
      mask.insert(mask.end(), m.begin(), m.end());
    }

    Tensor masked = mask_tokens(aligned, mask, params.mask_embed);
    Tensor regenerated = ops::generate(ops::tokens_to_grid(masked), params.gen);
    Tensor target = ops::tokens_to_grid(t);
    Tensor layer_loss = frob_mean(regenerated, target, normalized);
    if (per_layer) per_layer->push_back(layer_loss.item());
    total = total.defined() ? add(total, layer_loss) : layer_loss;
  }
  return total;
}

Tensor drd_loss(const std::vector<Tensor>& student_feats,
                const std::vector<Tensor>& teacher_feats,
                const ops::AlignParams& align_params, bool normalized,
                std::vector<double>* per_layer) {
  check(!student_feats.empty() && !teacher_feats.empty(), Err::ShapeMismatch,
        "drd_loss: no feature taps");
  const auto taps = tap_mapping(student_feats.size(), teacher_feats.size());
  Tensor total;
  if (per_layer) per_layer->clear();
  for (std::size_t i = 0; i < student_feats.size(); ++i) {
    Tensor aligned = ops::align(student_feats[i], align_params);
    Tensor layer_loss = frob_mean(aligned, teacher_feats[taps[i]], normalized);
    if (per_layer) per_layer->push_back(layer_loss.item());
    total = total.defined() ? add(total, layer_loss) : layer_loss;
  }
  return total;
}

Tensor student_logit_loss(const Tensor& y_student, const Tensor& y_pseudo) {
  check(y_student.shape() == y_pseudo.shape(), Err::ShapeMismatch,
        "student_logit_loss: shape mismatch");
  return l1_mean(y_student, detach(y_pseudo));
}

Tensor inter_layer_loss(const Tensor& y_inter, const Tensor& y_teacher_prime,
                        const Tensor& y_student) {
  check(y_inter.shape() == y_teacher_prime.shape() &&
            y_inter.shape() == y_student.shape(),
        Err::ShapeMismatch, "inter_layer_loss: shape mismatch");
  return add(l1_mean(y_inter, detach(y_teacher_prime)),
             l1_mean(y_inter, detach(y_student)));
}

Tensor combine_total(const Tensor& l_gt, const Tensor& l_feature,
                     const Tensor& l_logits, const LossWeights& weights) {
  check(std::isfinite(weights.lambda1) && weights.lambda1 >= 0 &&
            std::isfinite(weights.lambda2) && weights.lambda2 >= 0,
        Err::InvalidArgument, "loss weights must be finite and non-negative");
  Tensor total = l_gt;
  if (l_feature.defined()) total = add(total, scale(l_feature, weights.lambda1));
  if (l_logits.defined()) total = add(total, scale(l_logits, weights.lambda2));
  return total;
}

}  // namespace rkiqt::distill
