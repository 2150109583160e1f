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
#include "rkiqt/data/crops.hpp"
#include "rkiqt/ops/mcd_modules.hpp"
#include "rkiqt/ops/stems.hpp"
#include "rkiqt/ops/transformer.hpp"

namespace rkiqt::student {

struct EncoderConfig {
  int image_size = 64;
  int patch_size = 8;
  int dim = 64;
  int depth = 4;
  int heads = 4;
  double mlp_ratio = 2.0;
  int decoder_depth = 1;
  ops::StemConfig stem;  // stem.out_dim is forced to dim

  int grid() const { return image_size / patch_size; }
  int patch_tokens() const { return grid() * grid(); }
  void validate() const;
};

// CLS-token initializer exposed on its own: truncated Gaussian, sigma 0.02,
// cut at two sigma.
Tensor init_cls_token(int dim, Rng& rng);

struct DecoderLayer {
  Tensor ln1_g, ln1_b;            // Norm(F_o + J) ahead of self-attention
  ops::AttentionParams self_attn;
  Tensor ln2_g, ln2_b;            // Norm(Q_d) ahead of cross-attention
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;

  static DecoderLayer init(int dim, Rng& rng);
  ops::NamedParams named(const std::string& prefix) const;
};

// The encoder output rows for [CLS, Conv, Inv] + everything the losses need.
struct StudentOutput {
  Tensor tokens;                   // [B, 3, D] final encoder rows
  Tensor patch_feats;              // [B, n, D] final patch rows
  std::vector<Tensor> layer_feats; // per block, patch rows [B, n, D]
  Tensor decoded;                  // [B, 3, D] decoder rows (diagnostics)
  Tensor scores;                   // [B, 3]: y_cls, y_conv, y_inv
  Tensor y_cls, y_conv, y_inv;     // [B] columns of scores
};

struct QualityPrediction {
  double y_cls = 0, y_conv = 0, y_inv = 0;
  double final_score = 0;  // inference contract: the CLS score
};

class StudentModel {
 public:
  StudentModel() = default;
  StudentModel(const EncoderConfig& cfg, Rng& rng);

  const EncoderConfig& config() const { return cfg_; }

  // pixels: [B, 3, S, S], already standardized
  StudentOutput forward(const Tensor& pixels) const;

  ops::NamedParams named_params() const;  // "student.*"
  void save(Checkpoint& ck) const;
  static StudentModel from_checkpoint(const Checkpoint& ck,
                                      const EncoderConfig& cfg);

 private:
  EncoderConfig cfg_;
  Tensor cls_token_;              // [D]
  Tensor conv_pos_, inv_pos_;     // [D]
  Tensor patch_embed_w_, patch_embed_b_;
  Tensor patch_pos_;              // [n, D]
  ops::ConvStemParams conv_stem_;
  ops::InvStemParams inv_stem_;
  std::vector<ops::BlockParams> blocks_;
  Tensor final_ln_g_, final_ln_b_;
  Tensor J_;                      // [3, D]
  std::vector<DecoderLayer> decoder_;
  Tensor head_ln_g_, head_ln_b_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
};

// Patch grid of a standardized crop batch: [B, 3, S, S] -> [B, n, 3*p*p].
Tensor extract_patches(const Tensor& pixels, int patch_size);

}  // namespace rkiqt::student
