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

#include "rkiqt/cli/config.hpp"
#include "rkiqt/train/trainer.hpp"

namespace rkiqt::cli {

// defaults < config file < --set overrides < RKIQT_SEED
RunConfig resolve_config(const std::string& config_file,
                         const std::vector<std::string>& overrides);

struct LoadedTeachers {
  teachers::NarTeacher nar;
  teachers::BiasTeacher conv, inv;
  bool has_nar = false, has_bias = false;
  train::TeacherSet set() const;
};

// Reads <dir>/{nar,conv,inv}.ckpt as required by the config's flags.
LoadedTeachers load_teachers(const RunConfig& cfg);

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, int bases,
              int levels, const std::string& families, int base_size);
int cmd_pretrain_teacher(const RunConfig& cfg, const std::string& kind,
                         const std::string& out_path);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
             const std::string& split, const std::string& out_csv);
int cmd_cross_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                   const std::vector<std::string>& tests,
                   const std::string& out_csv);
int cmd_infer(const std::string& checkpoint_path,
              const std::vector<std::string>& images, int crops,
              std::uint64_t seed);
int cmd_ablate(const RunConfig& cfg, const std::string& suite, int seeds);
int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_path);
int cmd_saliency(const std::string& checkpoint_path, const std::string& image,
                 const std::string& out_path);
int cmd_strip(const std::string& in_path, const std::string& out_path);

// teacher quality gates printed by pretrain-teacher
eval::MetricPair evaluate_bias_teacher(const teachers::BiasTeacher& teacher,
                                       const data::DatasetManifest& manifest,
                                       const RunConfig& cfg, double mos_min,
                                       double mos_max);
eval::MetricPair evaluate_nar_teacher(const teachers::NarTeacher& teacher,
                                      const data::DatasetManifest& manifest,
                                      const data::ReferencePool& refs,
                                      const RunConfig& cfg, double mos_min,
                                      double mos_max);

}  // namespace rkiqt::cli
