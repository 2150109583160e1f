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

#include "rkiqt/teachers/teachers.hpp"

#include <cmath>

namespace rkiqt::teachers {

namespace {

Tensor he_conv(int out_c, int in_c, int k, Rng& rng) {
  Tensor w = Tensor::zeros({out_c, in_c, k, k}, true);
  const double std = std::sqrt(2.0 / double(in_c * k * k));
  for (auto& v : w.data()) v = rng.normal() * std;
  return w;
}

}  // namespace

const char* bias_kind_name(BiasKind kind) {
  return kind == BiasKind::kConv ? "conv" : "inv";
}

std::string BiasTeacher::prefix() const {
  return std::string("teacher_") + bias_kind_name(cfg_.kind);
}

BiasTeacher::BiasTeacher(const BiasTeacherConfig& cfg, Rng& rng) : cfg_(cfg) {
  check(cfg.widths.size() >= 4, Err::InvalidArgument,
        "bias teacher needs at least 4 blocks for the three mid-taps");
  int in_c = 3;
  for (int width : cfg_.widths) {
    if (cfg_.kind == BiasKind::kConv) {
      w_.push_back(he_conv(width, in_c, 3, rng));
      if (in_c == 3) ops::zero_dc(w_.back());
    } else {
      w_.push_back(he_conv(width, in_c, 1, rng));
      ops::InvolutionConfig ic;
      ic.kernel_size = cfg_.involution_kernel;
      ic.stride = 2;
      ic.groups = 1;
      ic.reduction = 4;
      inv_cfg_.push_back(ic);
      inv_.push_back(ops::InvolutionParams::init(width, ic, rng));
    }
    b_.push_back(Tensor::zeros({width}, true));
    in_c = width;
  }
  head_w_ = ops::linear_init(cfg_.widths.back(), 1, rng);
  head_b_ = Tensor::full({1}, 0.5);
  head_b_.set_requires_grad(true);
}

BiasTeacherOutput BiasTeacher::forward(const Tensor& pixels) const {
  check(!w_.empty(), Err::UntrainedTeacher, "bias teacher not initialized");
  BiasTeacherOutput out;
  Tensor h = pixels;
  const std::size_t n = w_.size();
  // taps at 1/4, 1/2, 3/4 of the depth (blocks 1..n-1 of n)
  const std::size_t t1 = std::max<std::size_t>(1, n / 4);
  const std::size_t t2 = std::max<std::size_t>(t1 + 1, n / 2);
  const std::size_t t3 = std::max<std::size_t>(t2 + 1, 3 * n / 4);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg_.kind == BiasKind::kConv) {
      h = relu(conv2d(h, w_[i], b_[i], 2, 1));
    } else {
      h = relu(conv2d(h, w_[i], b_[i], 1, 0));
      h = relu(involution(h, inv_cfg_[i], inv_[i]));
    }
    const std::size_t done = i + 1;
    if (done == t1 || done == t2 || done == t3) out.taps.push_back(h);
  }
  check(out.taps.size() == 3, Err::Internal, "bias teacher tap count");
  out.y_prime = reshape(linear(spatial_mean(h), head_w_, head_b_), {h.dim(0)});
  return out;
}

std::vector<int> BiasTeacher::tap_channels() const {
  const std::size_t n = cfg_.widths.size();
  const std::size_t t1 = std::max<std::size_t>(1, n / 4);
  const std::size_t t2 = std::max<std::size_t>(t1 + 1, n / 2);
  const std::size_t t3 = std::max<std::size_t>(t2 + 1, 3 * n / 4);
  return {cfg_.widths[t1 - 1], cfg_.widths[t2 - 1], cfg_.widths[t3 - 1]};
}

ops::NamedParams BiasTeacher::named_params() const {
  ops::NamedParams out;
  const std::string p = prefix();
  for (std::size_t i = 0; i < w_.size(); ++i) {
    out.emplace_back(p + ".block" + std::to_string(i) + ".w", w_[i]);
    out.emplace_back(p + ".block" + std::to_string(i) + ".b", b_[i]);
    if (cfg_.kind == BiasKind::kInv) {
      const auto sub = inv_[i].named(p + ".block" + std::to_string(i) + ".inv");
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }
  out.emplace_back(p + ".head.w", head_w_);
  out.emplace_back(p + ".head.b", head_b_);
  return out;
}

void BiasTeacher::set_frozen() {
  for (auto& [name, t] : named_params()) t.set_requires_grad(false);
}

void BiasTeacher::save(Checkpoint& ck) const {
  for (const auto& [name, t] : named_params()) ck.put(name, prefix(), t);
}

BiasTeacher BiasTeacher::from_checkpoint(const Checkpoint& ck,
                                         const BiasTeacherConfig& cfg) {
  Rng rng(0);
  BiasTeacher t(cfg, rng);
  for (auto& [name, param] : t.named_params()) {
    Tensor stored = ck.get(name);
    check(stored.shape() == param.shape(), Err::BadCheckpoint,
          "teacher checkpoint shape mismatch for " + name);
    param.data() = stored.data();
  }
  t.trained_ = true;
  return t;
}

// ---- NAR teacher -------------------------------------------------------------

NarTeacher::NarTeacher(const NarTeacherConfig& cfg, Rng& rng) : cfg_(cfg) {
  check(cfg_.image_size % cfg_.patch_size == 0, Err::ShapeMismatch,
        "nar teacher: image size not divisible by patch size");
  // extractor: stride-2 convs down to the patch grid
  int stages = 0;
  for (int s = cfg_.patch_size; s > 1; s /= 2) {
    check(s % 2 == 0, Err::InvalidArgument, "patch size must be a power of 2");
    ++stages;
  }
  std::vector<int> ch = {3};
  for (int i = 0; i < stages - 1; ++i) {
    const int fallback = std::min(cfg_.dim, 16 << i);
    ch.push_back(i < int(cfg_.extractor_widths.size())
                     ? cfg_.extractor_widths[std::size_t(i)]
                     : fallback);
  }
  ch.push_back(cfg_.dim);
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    ew_.push_back(he_conv(ch[i + 1], ch[i], 3, rng));
    if (i == 0) ops::zero_dc(ew_.back());
    eb_.push_back(Tensor::zeros({ch[i + 1]}, true));
  }

  cls_ = ops::trunc_normal({cfg_.dim}, rng);
  pos_ = ops::trunc_normal({cfg_.tokens(), cfg_.dim}, rng);
  seg_lq_ = ops::trunc_normal({cfg_.dim}, rng);
  seg_hq_ = ops::trunc_normal({cfg_.dim}, rng);
  for (int i = 0; i < cfg_.depth; ++i)
    blocks_.push_back(ops::BlockParams::init(cfg_.dim, cfg_.mlp_ratio, rng));
  ln_g_ = Tensor::full({cfg_.dim}, 1.0);
  ln_g_.set_requires_grad(true);
  ln_b_ = Tensor::zeros({cfg_.dim}, true);
  head_w_ = ops::linear_init(cfg_.dim, 1, rng);
  head_b_ = Tensor::full({1}, 0.5);
  head_b_.set_requires_grad(true);

  // the extractor stays frozen from initialization on
  for (std::size_t i = 0; i < ew_.size(); ++i) {
    ew_[i].set_requires_grad(false);
    eb_[i].set_requires_grad(false);
  }
}

Tensor NarTeacher::extract_tokens(const Tensor& pixels) const {
  Tensor h = pixels;
  for (std::size_t i = 0; i < ew_.size(); ++i)
    h = relu(conv2d(h, ew_[i], eb_[i], 2, 1));
  // [B, dim, g, g] -> [B, n, dim]
  const idx_t B = h.dim(0), D = h.dim(1), n = h.dim(2) * h.dim(3);
  return permute(reshape(h, {B, D, n}), {0, 2, 1});
}

NarOutput NarTeacher::forward(const Tensor& lq_pixels,
                              const Tensor& hq_pixels) const {
  check(hq_pixels.defined() && hq_pixels.numel() > 0, Err::EmptyPool,
        "nar teacher requires a high-quality reference input");
  const idx_t B = lq_pixels.dim(0);
  const int D = cfg_.dim;
  const idx_t n = cfg_.tokens();

  Tensor lq = extract_tokens(lq_pixels);
  Tensor hq = extract_tokens(hq_pixels);
  check(lq.dim(1) == n && hq.dim(1) == n, Err::ShapeMismatch,
        "nar extractor grid mismatch");

  // + shared spatial positions, + per-sequence segment embedding
  auto add_rowvec = [&](const Tensor& x, const Tensor& vec) {
    return reshape(add_broadcast0(reshape(x, {B * n, D}), vec), {B, n, D});
  };
  lq = add_rowvec(add_broadcast0(lq, pos_), seg_lq_);
  hq = add_rowvec(add_broadcast0(hq, pos_), seg_hq_);
  Tensor cls_rows =
      add_broadcast0(Tensor::zeros({B, 1, D}), reshape(cls_, {1, D}));

  Tensor h = concat({cls_rows, lq, hq}, 1);
  NarOutput out;
  for (const auto& blk : blocks_) {
    h = ops::block_forward(h, blk, cfg_.heads);
    out.layer_feats.push_back(narrow(h, 1, 1, n));  // LQ positions
  }
  Tensor hn = layernorm(h, ln_g_, ln_b_);
  Tensor cls_out = reshape(narrow(hn, 1, 0, 1), {B, D});
  out.y = reshape(linear(cls_out, head_w_, head_b_), {B});
  return out;
}

ops::NamedParams NarTeacher::named_params() const {
  ops::NamedParams out;
  for (std::size_t i = 0; i < ew_.size(); ++i) {
    out.emplace_back("teacher_nar.extract" + std::to_string(i) + ".w", ew_[i]);
    out.emplace_back("teacher_nar.extract" + std::to_string(i) + ".b", eb_[i]);
  }
  const auto t = trainable_params();
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

ops::NamedParams NarTeacher::trainable_params() const {
  ops::NamedParams out = {
      {"teacher_nar.cls", cls_},       {"teacher_nar.pos", pos_},
      {"teacher_nar.seg_lq", seg_lq_}, {"teacher_nar.seg_hq", seg_hq_},
      {"teacher_nar.ln.g", ln_g_},     {"teacher_nar.ln.b", ln_b_},
      {"teacher_nar.head.w", head_w_}, {"teacher_nar.head.b", head_b_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto sub = blocks_[i].named("teacher_nar.block" + std::to_string(i));
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

void NarTeacher::set_frozen() {
  for (auto& [name, t] : named_params()) t.set_requires_grad(false);
}

void NarTeacher::save(Checkpoint& ck) const {
  for (const auto& [name, t] : named_params()) ck.put(name, "teacher_nar", t);
}

NarTeacher NarTeacher::from_checkpoint(const Checkpoint& ck,
                                       const NarTeacherConfig& cfg) {
  Rng rng(0);
  NarTeacher t(cfg, rng);
  for (auto& [name, param] : t.named_params()) {
    Tensor stored = ck.get(name);
    check(stored.shape() == param.shape(), Err::BadCheckpoint,
          "nar checkpoint shape mismatch for " + name);
    param.data() = stored.data();
  }
  t.trained_ = true;
  return t;
}

// ---- intermediate layer --------------------------------------------------------

InterLayer::InterLayer(const std::vector<int>& tap_channels, int common_dim,
                       Rng& rng) {
  for (int ch : tap_channels) {
    aw_.push_back(he_conv(common_dim, ch, 1, rng));
    ab_.push_back(Tensor::zeros({common_dim}, true));
  }
  mlp_w1_ = ops::linear_init(common_dim, common_dim, rng);
  mlp_b1_ = Tensor::zeros({common_dim}, true);
  mlp_w2_ = ops::linear_init(common_dim, 1, rng);
  mlp_b2_ = Tensor::full({1}, 0.5);
  mlp_b2_.set_requires_grad(true);
}

Tensor InterLayer::forward(const std::vector<Tensor>& taps) const {
  check(taps.size() == aw_.size(), Err::ShapeMismatch,
        "inter layer expects " + std::to_string(aw_.size()) + " taps");
  Tensor fused;  // ordered addition: ((A1F1 + A2F2) + A3F3)
  for (std::size_t i = 0; i < taps.size(); ++i) {
    Tensor projected = spatial_mean(conv2d(taps[i], aw_[i], ab_[i], 1, 0));
    fused = i == 0 ? projected : add(fused, projected);
  }
  Tensor hidden = relu(linear(fused, mlp_w1_, mlp_b1_));
  Tensor y = linear(hidden, mlp_w2_, mlp_b2_);
  return reshape(y, {y.dim(0)});
}

ops::NamedParams InterLayer::named_params(const std::string& prefix) const {
  ops::NamedParams out;
  for (std::size_t i = 0; i < aw_.size(); ++i) {
    out.emplace_back(prefix + ".a" + std::to_string(i) + ".w", aw_[i]);
    out.emplace_back(prefix + ".a" + std::to_string(i) + ".b", ab_[i]);
  }
  out.emplace_back(prefix + ".mlp.w1", mlp_w1_);
  out.emplace_back(prefix + ".mlp.b1", mlp_b1_);
  out.emplace_back(prefix + ".mlp.w2", mlp_w2_);
  out.emplace_back(prefix + ".mlp.b2", mlp_b2_);
  return out;
}

void InterLayer::save(Checkpoint& ck, const std::string& prefix,
                      const std::string& tag) const {
  for (const auto& [name, t] : named_params(prefix)) ck.put(name, tag, t);
}

InterLayer InterLayer::from_checkpoint(const Checkpoint& ck,
                                       const std::string& prefix,
                                       const std::vector<int>& tap_channels,
                                       int common_dim) {
  Rng rng(0);
  InterLayer layer(tap_channels, common_dim, rng);
  for (auto& [name, param] : layer.named_params(prefix)) {
    Tensor stored = ck.get(name);
    check(stored.shape() == param.shape(), Err::BadCheckpoint,
          "inter-layer checkpoint shape mismatch for " + name);
    param.data() = stored.data();
  }
  return layer;
}

}  // namespace rkiqt::teachers
