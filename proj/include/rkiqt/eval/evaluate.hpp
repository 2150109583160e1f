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
#include <unordered_map>
#include <vector>

#include "rkiqt/core/checkpoint.hpp"
#include "rkiqt/data/crops.hpp"
#include "rkiqt/data/manifest.hpp"
#include "rkiqt/eval/metrics.hpp"
#include "rkiqt/student/student.hpp"

namespace rkiqt::eval {

class ImageCache {
 public:
  const Image8& get(const std::string& path);

 private:
  std::unordered_map<std::string, Image8> cache_;
};

// Per-record score: mean CLS output over `crops` random crops, mapped back
// to the dataset's native label scale. Crop randomness is derived from
// (seed, record id), so results are order-independent and reproducible.
std::vector<double> predict_scores(const student::StudentModel& model,
                                   const data::DatasetManifest& manifest,
                                   int crops, std::uint64_t seed,
                                   const data::PixelNorm& norm, double mos_min,
                                   double mos_max,
                                   ImageCache* cache = nullptr);

double predict_one(const student::StudentModel& model, const Image8& image,
                   int crops, std::uint64_t seed, const data::PixelNorm& norm,
                   double mos_min, double mos_max);

MetricPair evaluate_model(const student::StudentModel& model,
                          const data::DatasetManifest& manifest, int crops,
                          std::uint64_t seed, const data::PixelNorm& norm,
                          double mos_min, double mos_max, bool logistic4 = false,
                          ImageCache* cache = nullptr);

// Checkpoint-level entry points (config + normalization read from the file).
struct LoadedStudent {
  student::StudentModel model;
  data::PixelNorm norm;
  double mos_min = 0, mos_max = 1;
  int crops_eval = 10;
  bool logistic4 = false;
  std::string config_text;
};
LoadedStudent load_student(const Checkpoint& ck);

MetricPair evaluate_checkpoint(const Checkpoint& ck,
                               const data::DatasetManifest& manifest,
                               int crops, std::uint64_t seed);

// One row per test set; the checkpoint is never modified.
std::map<std::string, MetricPair> cross_evaluate(
    const Checkpoint& ck,
    const std::map<std::string, data::DatasetManifest>& test_manifests,
    int crops, std::uint64_t seed);

}  // namespace rkiqt::eval
