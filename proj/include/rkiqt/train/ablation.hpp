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

#include <map>
#include <string>
#include <vector>

#include "rkiqt/train/trainer.hpp"

namespace rkiqt::train {

// One training run on one split repeat, evaluated on its held-out test half.
struct SingleRun {
  double srcc = 0;
  double plcc = 0;
  bool diverged = false;
  double final_train_loss = 0;
};

SingleRun run_single_experiment(cli::RunConfig cfg,
                                const data::DatasetManifest& manifest,
                                const data::ReferencePool& refs,
                                const TeacherSet& teachers, int repeat_index);

struct AblationCell {
  std::string method;
  std::vector<double> srcc, plcc;  // per seed
  double srcc_mean = 0, srcc_std = 0, plcc_mean = 0, plcc_std = 0;
};

struct AblationResult {
  std::string suite;
  std::string config_hash, encoder_hash;
  std::vector<AblationCell> cells;

  std::string csv() const;       // suite,method,seed,srcc,plcc
  std::string markdown() const;  // mean +- std, one row per method
};

// Suites: overall (baseline / w/o regularization / w/o reference-distill /
// full), mcd_vs_drd, mask_policies, inter_layer. Each cell runs `seeds`
// split repeats. `cache` memoizes runs across suites by (config, repeat).
AblationResult run_ablation(const std::string& suite,
                            const cli::RunConfig& base,
                            const data::DatasetManifest& manifest,
                            const data::ReferencePool& refs,
                            const TeacherSet& teachers, int seeds = 5,
                            std::map<std::string, SingleRun>* cache = nullptr,
                            bool verbose = false);

std::vector<std::string> ablation_suites();

// Column statistics used by the tables.
double mean_of(const std::vector<double>& v);
double std_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

}  // namespace rkiqt::train
