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

#include <array>

#include "rkiqt/eval/evaluate.hpp"

namespace rkiqt::eval {

// Mean pairwise cosine similarity between the decoded CLS/Conv/Inv rows over
// a manifest; diagonal is exactly 1.
using SimilarityMatrix = std::array<std::array<double, 3>, 3>;
SimilarityMatrix token_similarity(const student::StudentModel& model,
                                  const data::DatasetManifest& manifest,
                                  const data::PixelNorm& norm,
                                  std::uint64_t seed,
                                  ImageCache* cache = nullptr);

// Gradient-weighted activation map of the CLS score against the final patch
// features, evaluated on the center crop and resampled to the input size.
// Values in [0,1]; constant maps collapse to all zeros.
struct Heatmap {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major
};
Heatmap saliency_map(const student::StudentModel& model, const Image8& image,
                     const data::PixelNorm& norm);

// Red-tinted overlay for quick inspection.
Image8 saliency_overlay(const Image8& image, const Heatmap& map);

}  // namespace rkiqt::eval
