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

#include <cstdint>
#include <string>
#include <vector>

#include "rkiqt/data/crops.hpp"
#include "rkiqt/distill/losses.hpp"
#include "rkiqt/ops/mask.hpp"
#include "rkiqt/student/student.hpp"
#include "rkiqt/teachers/teachers.hpp"

namespace rkiqt::cli {

// Fully resolved run configuration. Precedence: profile defaults < config
// file < command-line overrides; RKIQT_SEED beats them all for `seed`.
struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = library default
  bool deterministic = true;

  int image_size = 64;
  int patch_size = 8;
  int dim = 64;
  int depth = 4;
  int heads = 4;
  double mlp_ratio = 2.0;
  int decoder_depth = 1;

  int teacher_dim = 32;

  int epochs = 9;
  double lr = 2e-4;
  double teacher_lr = 2e-3;
  int teacher_crops = 8;
  double decay_factor = 10.0;
  int decay_every = 3;
  int batch_size = 16;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  double lambda1 = 0.1;
  double lambda2 = 1.0;
  int crops_train = 8;
  int crops_eval = 10;
  int val_crops = 2;
  double train_fraction = 0.8;
  int repeat_index = 0;
  std::string mask_policy = "random";
  double mask_ratio = 0.5;
  bool no_nar = false;
  bool no_regular = false;
  bool inter_layer = true;
  std::string feature_mode = "mcd";  // mcd | drd
  bool normalized_frobenius = true;
  bool logistic4 = false;
  double norm_mean = 0.5;
  double norm_std = 0.5;

  std::string data_dir;      // directory holding manifest.csv + refs.csv
  std::string teachers_dir;  // pretrained teacher checkpoints
  std::string out_dir = "runs";

  static RunConfig profile_defaults(const std::string& name);
  void apply_profile(const std::string& name);
  void apply_file(const std::string& path);
  void apply_kv(const std::string& key, const std::string& value);
  void apply_env();  // RKIQT_SEED

  std::string canonical_text() const;  // sorted `key = value` lines
  std::string hash() const;
  std::string encoder_hash() const;  // architecture keys only
  static RunConfig from_text(const std::string& text);

  student::EncoderConfig encoder_config() const;
  teachers::NarTeacherConfig nar_config() const;
  teachers::BiasTeacherConfig bias_config(teachers::BiasKind kind) const;
  ops::MaskSpec mask_spec() const;
  distill::LossWeights loss_weights() const;
  data::PixelNorm pixel_norm() const;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
  std::string default_value;
};
std::vector<ConfigKey> config_registry();

}  // namespace rkiqt::cli
