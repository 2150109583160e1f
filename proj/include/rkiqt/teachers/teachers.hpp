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

#include <string>
#include <vector>

#include "rkiqt/core/checkpoint.hpp"
#include "rkiqt/ops/transformer.hpp"

namespace rkiqt::teachers {

// ---- inductive-bias teachers (frozen quality regressors) -------------------

enum class BiasKind { kConv, kInv };
const char* bias_kind_name(BiasKind kind);

struct BiasTeacherConfig {
  BiasKind kind = BiasKind::kConv;
  std::vector<int> widths = {16, 32, 48, 64};  // one stride-2 block each
  int involution_kernel = 3;
};

struct BiasTeacherOutput {
  std::vector<Tensor> taps;  // F1, F2, F3 at 1/4, 1/2, 3/4 depth
  Tensor y_prime;            // [B]
};

class BiasTeacher {
 public:
  BiasTeacher() = default;
  BiasTeacher(const BiasTeacherConfig& cfg, Rng& rng);

  const BiasTeacherConfig& config() const { return cfg_; }
  bool trained() const { return trained_; }
  void set_trained(bool v) { trained_ = v; }

  BiasTeacherOutput forward(const Tensor& pixels) const;
  std::vector<int> tap_channels() const;

  ops::NamedParams named_params() const;
  void set_frozen();  // clears requires_grad on every parameter
  void save(Checkpoint& ck) const;
  static BiasTeacher from_checkpoint(const Checkpoint& ck,
                                     const BiasTeacherConfig& cfg);

 private:
  BiasTeacherConfig cfg_;
  std::vector<Tensor> w_, b_;  // conv kind: 3x3 s2; inv kind: 1x1 projections
  std::vector<ops::InvolutionParams> inv_;
  std::vector<ops::InvolutionConfig> inv_cfg_;
  Tensor head_w_, head_b_;
  bool trained_ = false;
  std::string prefix() const;
};

// ---- non-aligned-reference teacher ------------------------------------------

struct NarTeacherConfig {
  int dim = 32;
  int depth = 4;
  int heads = 4;
  double mlp_ratio = 2.0;
  int image_size = 64;
  int patch_size = 8;          // must match the student grid
  std::vector<int> extractor_widths = {16, 24};  // + final conv to dim

  int grid() const { return image_size / patch_size; }
  int tokens() const { return grid() * grid(); }
};

struct NarOutput {
  std::vector<Tensor> layer_feats;  // per fusion block, LQ rows [B, n, dim]
  Tensor y;                         // [B]
};

// Frozen conv extractor applied to both inputs; the two token sequences get
// segment + position embeddings and run through a fusion encoder. Per-layer
// outputs restricted to the distorted image's positions are the
// distillation targets.
class NarTeacher {
 public:
  NarTeacher() = default;
  NarTeacher(const NarTeacherConfig& cfg, Rng& rng);

  const NarTeacherConfig& config() const { return cfg_; }
  bool trained() const { return trained_; }
  void set_trained(bool v) { trained_ = v; }

  NarOutput forward(const Tensor& lq_pixels, const Tensor& hq_pixels) const;

  ops::NamedParams named_params() const;         // everything
  ops::NamedParams trainable_params() const;     // fusion encoder + head
  void set_frozen();
  void save(Checkpoint& ck) const;
  static NarTeacher from_checkpoint(const Checkpoint& ck,
                                    const NarTeacherConfig& cfg);

 private:
  Tensor extract_tokens(const Tensor& pixels) const;  // [B, n, dim]

  NarTeacherConfig cfg_;
  std::vector<Tensor> ew_, eb_;  // extractor convs (frozen at init)
  Tensor cls_;
  Tensor pos_;                   // [n, dim] shared spatial positions
  Tensor seg_lq_, seg_hq_;       // [dim]
  std::vector<ops::BlockParams> blocks_;
  Tensor ln_g_, ln_b_;
  Tensor head_w_, head_b_;
  bool trained_ = false;
};

// ---- learnable intermediate layer (Eq. 2) -----------------------------------

// Per-tap 1x1 projection to a common width, global average pooling, ordered
// addition, then an MLP to the scalar pseudo-label.
class InterLayer {
 public:
  InterLayer() = default;
  InterLayer(const std::vector<int>& tap_channels, int common_dim, Rng& rng);

  Tensor forward(const std::vector<Tensor>& taps) const;  // [B]

  ops::NamedParams named_params(const std::string& prefix) const;
  void save(Checkpoint& ck, const std::string& prefix,
            const std::string& tag) const;
  static InterLayer from_checkpoint(const Checkpoint& ck,
                                    const std::string& prefix,
                                    const std::vector<int>& tap_channels,
                                    int common_dim);

 private:
  std::vector<Tensor> aw_, ab_;  // 1x1 conv per tap
  Tensor mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
};

}  // namespace rkiqt::teachers
