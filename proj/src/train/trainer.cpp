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

#include "rkiqt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rkiqt::train {

double normalize_mos(double mos, double mos_min, double mos_max) {
  if (mos_max <= mos_min) return 0.5;
  return (mos - mos_min) / (mos_max - mos_min);
}

namespace {

std::vector<Tensor> values_of(const ops::NamedParams& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

Tensor targets_tensor(const std::vector<double>& mos, double lo, double hi) {
  std::vector<Scalar> t;
  t.reserve(mos.size());
  for (double m : mos) t.push_back(normalize_mos(m, lo, hi));
  const idx_t n = idx_t(t.size());
  return Tensor::from({n}, std::move(t));
}

}  // namespace

DistillationTrainer::DistillationTrainer(const cli::RunConfig& cfg,
                                         TeacherSet teachers, double mos_min,
                                         double mos_max)
    : cfg_(cfg),
      teachers_(teachers),
      mos_min_(mos_min),
      mos_max_(mos_max) {
  cfg_.validate();
  Rng init_rng(derive_seed(cfg_.seed, "init_student"));
  student_ = student::StudentModel(cfg_.encoder_config(), init_rng);
  mcd_ = distill::McdParams::init(cfg_.dim, cfg_.teacher_dim, init_rng);
  if (teachers_.conv && teachers_.inv) {
    Rng il_rng(derive_seed(cfg_.seed, "init_inter_layers"));
    il_conv_ = std::make_unique<teachers::InterLayer>(
        teachers_.conv->tap_channels(), cfg_.teacher_dim, il_rng);
    il_inv_ = std::make_unique<teachers::InterLayer>(
        teachers_.inv->tap_channels(), cfg_.teacher_dim, il_rng);
  }

  AdamWConfig oc;
  oc.lr = cfg_.lr;
  oc.weight_decay = cfg_.weight_decay;
  opt_main_ = AdamW(main_group(), oc);
  opt_inter_ = AdamW(inter_group(), oc);
  mask_base_seed_ = derive_seed(cfg_.seed, "mask");
}

std::vector<Tensor> DistillationTrainer::main_group() const {
  auto named = student_.named_params();
  const auto a = mcd_.align_named();
  const auto g = mcd_.generate_named();
  named.insert(named.end(), a.begin(), a.end());
  named.insert(named.end(), g.begin(), g.end());
  return values_of(named);
}

std::vector<Tensor> DistillationTrainer::inter_group() const {
  ops::NamedParams named;
  if (il_conv_) {
    const auto c = il_conv_->named_params("inter_conv");
    named.insert(named.end(), c.begin(), c.end());
  }
  if (il_inv_) {
    const auto i = il_inv_->named_params("inter_inv");
    named.insert(named.end(), i.begin(), i.end());
  }
  return values_of(named);
}

StepLosses DistillationTrainer::compute_losses(const Tensor& pixels,
                                               const std::vector<double>& mos,
                                               const Tensor& ref_pixels,
                                               std::uint64_t step) {
  StepLosses out;
  const auto student_out = student_.forward(pixels);
  Tensor targets = targets_tensor(mos, mos_min_, mos_max_);
  Tensor l_gt = l1_mean(student_out.y_cls, targets);

  Tensor l_feature, l_logits;

  if (nar_enabled()) {
    std::vector<Tensor> teacher_feats;
    {
      NoGradGuard guard;
      const auto nar_out = teachers_.nar->forward(pixels, ref_pixels);
      teacher_feats = nar_out.layer_feats;
    }
    ops::MaskSpec spec = cfg_.mask_spec();
    spec.seed = derive_seed(mask_base_seed_, "step", step);
    if (cfg_.feature_mode == "mcd") {
      l_feature = distill::mcd_loss(student_out.layer_feats, teacher_feats,
                                    spec, mcd_, cfg_.normalized_frobenius,
                                    &out.report.per_layer_feature);
    } else {
      l_feature = distill::drd_loss(student_out.layer_feats, teacher_feats,
                                    mcd_.align, cfg_.normalized_frobenius,
                                    &out.report.per_layer_feature);
    }
  }

  if (regular_enabled()) {
    teachers::BiasTeacherOutput conv_out, inv_out;
    {
      NoGradGuard guard;
      conv_out = teachers_.conv->forward(pixels);
      inv_out = teachers_.inv->forward(pixels);
    }
    Tensor pseudo_conv, pseudo_inv;
    if (cfg_.inter_layer && il_conv_ && il_inv_) {
      pseudo_conv = il_conv_->forward(conv_out.taps);
      pseudo_inv = il_inv_->forward(inv_out.taps);
      out.inter_conv = distill::inter_layer_loss(pseudo_conv, conv_out.y_prime,
                                                 student_out.y_conv);
      out.inter_inv = distill::inter_layer_loss(pseudo_inv, inv_out.y_prime,
                                                student_out.y_inv);
      out.report.l_inter_conv = out.inter_conv.item();
      out.report.l_inter_inv = out.inter_inv.item();
    } else {
      // ablation: the teachers' own outputs act as the pseudo-labels
      pseudo_conv = conv_out.y_prime;
      pseudo_inv = inv_out.y_prime;
    }
    Tensor l_conv = distill::student_logit_loss(student_out.y_conv, pseudo_conv);
    Tensor l_inv = distill::student_logit_loss(student_out.y_inv, pseudo_inv);
    l_logits = add(l_conv, l_inv);
  }

  out.total =
      distill::combine_total(l_gt, l_feature, l_logits, cfg_.loss_weights());

  out.report.l_gt = l_gt.item();
  out.report.l_feature = l_feature.defined() ? l_feature.item() : 0.0;
  out.report.l_logits = l_logits.defined() ? l_logits.item() : 0.0;
  out.report.l_total = out.total.item();
  check(std::isfinite(out.report.l_total) &&
            std::isfinite(out.report.l_inter_conv) &&
            std::isfinite(out.report.l_inter_inv),
        Err::NonFiniteLoss,
        "non-finite loss at step " + std::to_string(step) + " (l_gt=" +
            std::to_string(out.report.l_gt) + ", l_feature=" +
            std::to_string(out.report.l_feature) + ", l_logits=" +
            std::to_string(out.report.l_logits) + ")");
  return out;
}

void DistillationTrainer::apply_step(StepLosses& losses) {
  opt_main_.zero_grad();
  opt_inter_.zero_grad();
  Tensor objective = losses.total;
  if (losses.inter_conv.defined()) objective = add(objective, losses.inter_conv);
  if (losses.inter_inv.defined()) objective = add(objective, losses.inter_inv);
  backward(objective);
  if (cfg_.clip_norm > 0) {
    std::vector<Tensor> all = opt_main_.params();
    const auto& inter = opt_inter_.params();
    all.insert(all.end(), inter.begin(), inter.end());
    clip_global_norm(all, cfg_.clip_norm);
  }
  opt_main_.step();
  opt_inter_.step();
}

void DistillationTrainer::set_lr(double lr) {
  opt_main_.set_lr(lr);
  opt_inter_.set_lr(lr);
}

Checkpoint DistillationTrainer::snapshot() const {
  Checkpoint ck;
  student_.save(ck);
  for (const auto& [name, t] : mcd_.align_named()) ck.put(name, "align", t);
  for (const auto& [name, t] : mcd_.generate_named())
    ck.put(name, "generate", t);
  if (il_conv_) il_conv_->save(ck, "inter_conv", "inter_conv");
  if (il_inv_) il_inv_->save(ck, "inter_inv", "inter_inv");
  ck.put_raw("meta.mos_range", "student", {2}, {mos_min_, mos_max_});
  ck.config_text = cfg_.canonical_text();
  return ck;
}

RunOutput DistillationTrainer::run(const data::DatasetManifest& train_set,
                                   const data::DatasetManifest& val_set,
                                   const data::ReferencePool& refs) {
  check(!train_set.empty(), Err::EmptyManifest, "training manifest is empty");
  if (nar_enabled())
    check(!refs.empty(), Err::EmptyPool,
          "reference pool required for the reference-distillation path");

  RunOutput out;
  std::ostringstream step_csv;
  step_csv << "step,l_gt,l_feature,l_logits,l_inter_conv,l_inter_inv,l_total\n";

  Rng order_rng(derive_seed(cfg_.seed, "train_order"));
  Rng crop_rng(derive_seed(cfg_.seed, "crops"));
  Rng ref_rng(derive_seed(cfg_.seed, "nar_refs"));
  eval::ImageCache cache;
  const auto norm = cfg_.pixel_norm();

  // each record contributes crops_train independent crops per epoch, every
  // crop its own sample
  const std::size_t n =
      train_set.size() * std::size_t(std::max(1, cfg_.crops_train));

  std::uint64_t step = 0;
  double best_srcc = -2;
  out.best = snapshot();

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    const double lr =
        scheduled_lr(cfg_.lr, cfg_.decay_factor, cfg_.decay_every, epoch);
    set_lr(lr);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i % train_set.size();
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1],
                order[std::size_t(order_rng.uniform_int(std::int64_t(i)))]);

    double loss_sum = 0;
    std::size_t loss_count = 0;
    for (std::size_t s0 = 0; s0 < n; s0 += std::size_t(cfg_.batch_size)) {
      const std::size_t s1 = std::min(n, s0 + std::size_t(cfg_.batch_size));
      std::vector<data::PatchBatch> parts;
      std::vector<data::PatchBatch> ref_parts;
      for (std::size_t i = s0; i < s1; ++i) {
        const auto& rec = train_set.records[order[i]];
        parts.push_back(data::crop_patches(cache.get(rec.path), rec.id,
                                           rec.mos, 1, cfg_.image_size,
                                           crop_rng));
        if (nar_enabled()) {
          const auto& ref_path = refs.paths[std::size_t(
              ref_rng.uniform_int(std::int64_t(refs.paths.size())))];
          ref_parts.push_back(data::crop_patches(cache.get(ref_path), "ref",
                                                 0.0, 1, cfg_.image_size,
                                                 crop_rng));
        }
      }
      data::PatchBatch batch = data::concat_batches(parts);
      Tensor pixels = data::normalize_pixels(batch.pixels, norm);
      Tensor ref_pixels;
      if (nar_enabled())
        ref_pixels = data::normalize_pixels(
            data::concat_batches(ref_parts).pixels, norm);

      StepLosses losses;
      try {
        losses = compute_losses(pixels, batch.mos, ref_pixels, step);
      } catch (const Error& e) {
        if (e.code() == Err::NonFiniteLoss) {
          out.diverged = true;
          out.last = snapshot();
          out.step_csv = step_csv.str();
          return out;
        }
        throw;
      }
      apply_step(losses);

      const auto& r = losses.report;
      step_csv << step << ',' << r.l_gt << ',' << r.l_feature << ','
               << r.l_logits << ',' << r.l_inter_conv << ',' << r.l_inter_inv
               << ',' << r.l_total << '\n';
      loss_sum += r.l_total;
      ++loss_count;
      ++step;
    }

    EpochRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.mean_train_loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    if (!val_set.empty() && val_set.size() >= 3) {
      const auto m = eval::evaluate_model(
          student_, val_set, cfg_.val_crops,
          derive_seed(cfg_.seed, "val_eval", std::uint64_t(epoch)), norm,
          mos_min_, mos_max_, false, &cache);
      row.val_srcc = m.srcc;
      row.val_plcc = m.plcc;
      if (m.srcc > best_srcc) {
        best_srcc = m.srcc;
        out.best = snapshot();
      }
    }
    out.epoch_rows.push_back(row);
  }

  out.last = snapshot();
  if (best_srcc <= -2) out.best = out.last;
  out.best_val_srcc = best_srcc;
  if (!val_set.empty() && val_set.size() >= 3) {
    const auto m = eval::evaluate_model(
        student_, val_set, cfg_.crops_eval, derive_seed(cfg_.seed, "final_eval"),
        norm, mos_min_, mos_max_, false, &cache);
    out.final_val_srcc = m.srcc;
    out.final_val_plcc = m.plcc;
  }
  out.step_csv = step_csv.str();
  return out;
}

// ---- teacher pretraining -------------------------------------------------------

namespace {

struct PretrainData {
  Rng order_rng, crop_rng, ref_rng;
  eval::ImageCache cache;
};

template <typename ForwardFn, typename ParamsFn>
void pretrain_loop(const cli::RunConfig& cfg,
                   const data::DatasetManifest& train_set,
                   const data::ReferencePool* refs, ForwardFn&& forward,
                   ParamsFn&& params_fn, std::uint64_t seed_salt) {
  const auto norm = cfg.pixel_norm();
  const double lo = train_set.mos_min(), hi = train_set.mos_max();

  AdamWConfig oc;
  oc.lr = cfg.teacher_lr;
  oc.weight_decay = cfg.weight_decay;
  AdamW opt(params_fn(), oc);

  Rng order_rng(derive_seed(cfg.seed, "teacher_order", seed_salt));
  Rng crop_rng(derive_seed(cfg.seed, "teacher_crops", seed_salt));
  Rng ref_rng(derive_seed(cfg.seed, "teacher_refs", seed_salt));
  eval::ImageCache cache;

  // every record contributes teacher_crops independent crops per epoch
  const std::size_t n =
      train_set.size() * std::size_t(std::max(1, cfg.teacher_crops));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(
        scheduled_lr(cfg.teacher_lr, cfg.decay_factor, cfg.decay_every, epoch));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i % train_set.size();
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1],
                order[std::size_t(order_rng.uniform_int(std::int64_t(i)))]);

    for (std::size_t s0 = 0; s0 < n; s0 += std::size_t(cfg.batch_size)) {
      const std::size_t s1 = std::min(n, s0 + std::size_t(cfg.batch_size));
      std::vector<data::PatchBatch> parts, ref_parts;
      for (std::size_t i = s0; i < s1; ++i) {
        const auto& rec = train_set.records[order[i]];
        parts.push_back(data::crop_patches(cache.get(rec.path), rec.id, rec.mos,
                                           1, cfg.image_size, crop_rng));
        if (refs) {
          const auto& ref_path = refs->paths[std::size_t(
              ref_rng.uniform_int(std::int64_t(refs->paths.size())))];
          ref_parts.push_back(data::crop_patches(cache.get(ref_path), "ref",
                                                 0.0, 1, cfg.image_size,
                                                 crop_rng));
        }
      }
      data::PatchBatch batch = data::concat_batches(parts);
      Tensor pixels = data::normalize_pixels(batch.pixels, norm);
      Tensor ref_pixels;
      if (refs)
        ref_pixels = data::normalize_pixels(
            data::concat_batches(ref_parts).pixels, norm);

      Tensor y = forward(pixels, ref_pixels);
      Tensor loss = l1_mean(y, targets_tensor(batch.mos, lo, hi));
      check(std::isfinite(loss.item()), Err::NonFiniteLoss,
            "teacher pretraining diverged");
      opt.zero_grad();
      backward(loss);
      if (cfg.clip_norm > 0) clip_global_norm(opt.params(), cfg.clip_norm);
      opt.step();
    }
  }
}

}  // namespace

Checkpoint pretrain_bias_teacher(teachers::BiasKind kind,
                                 const cli::RunConfig& cfg,
                                 const data::DatasetManifest& train_set,
                                 const data::DatasetManifest& val_set) {
  check(!train_set.empty(), Err::EmptyManifest, "teacher pretraining: empty manifest");
  Rng init_rng(derive_seed(cfg.seed, kind == teachers::BiasKind::kConv
                                         ? "init_teacher_conv"
                                         : "init_teacher_inv"));
  teachers::BiasTeacher teacher(cfg.bias_config(kind), init_rng);

  pretrain_loop(
      cfg, train_set, nullptr,
      [&](const Tensor& pixels, const Tensor&) {
        return teacher.forward(pixels).y_prime;
      },
      [&] { return values_of(teacher.named_params()); },
      kind == teachers::BiasKind::kConv ? 1 : 2);

  (void)val_set;
  teacher.set_trained(true);
  Checkpoint ck;
  teacher.save(ck);
  ck.put_raw("meta.mos_range", std::string("teacher_") +
                                   teachers::bias_kind_name(kind),
             {2}, {train_set.mos_min(), train_set.mos_max()});
  ck.config_text = cfg.canonical_text();
  return ck;
}

Checkpoint pretrain_nar_teacher(const cli::RunConfig& cfg,
                                const data::DatasetManifest& train_set,
                                const data::DatasetManifest& val_set,
                                const data::ReferencePool& refs) {
  check(!train_set.empty(), Err::EmptyManifest, "teacher pretraining: empty manifest");
  check(!refs.empty(), Err::EmptyPool, "nar pretraining needs a reference pool");
  Rng init_rng(derive_seed(cfg.seed, "init_teacher_nar"));
  teachers::NarTeacher teacher(cfg.nar_config(), init_rng);

  pretrain_loop(
      cfg, train_set, &refs,
      [&](const Tensor& pixels, const Tensor& ref_pixels) {
        return teacher.forward(pixels, ref_pixels).y;
      },
      [&] { return values_of(teacher.trainable_params()); }, 3);

  (void)val_set;
  teacher.set_trained(true);
  Checkpoint ck;
  teacher.save(ck);
  ck.put_raw("meta.mos_range", "teacher_nar", {2},
             {train_set.mos_min(), train_set.mos_max()});
  ck.config_text = cfg.canonical_text();
  return ck;
}

}  // namespace rkiqt::train
