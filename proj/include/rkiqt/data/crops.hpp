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

#include "rkiqt/core/rng.hpp"
#include "rkiqt/core/tensor.hpp"
#include "rkiqt/data/manifest.hpp"
#include "rkiqt/image/image.hpp"

namespace rkiqt::data {

struct PatchSource {
  std::string image_id;
  int crop_y = 0;
  int crop_x = 0;
};

// Batch of crops: pixels [N x 3 x H x W] in [0,1] plus provenance and the
// source record's label per patch.
struct PatchBatch {
  Tensor pixels;
  std::vector<PatchSource> sources;
  std::vector<double> mos;

  idx_t size() const { return pixels.defined() ? pixels.dim(0) : 0; }
};

// Uniform random offsets over the valid positions of each crop.
PatchBatch crop_patches(const ImageRecord& record, int crops_per_image,
                        int crop_size, Rng& rng);
PatchBatch crop_patches(const Image8& img, const std::string& id, double mos,
                        int crops_per_image, int crop_size, Rng& rng);

// Deterministic center crop (diagnostics).
PatchBatch center_crop(const Image8& img, const std::string& id, double mos,
                       int crop_size);

PatchBatch concat_batches(const std::vector<PatchBatch>& batches);

// Channel standardization applied after the [0,1] decode.
struct PixelNorm {
  double mean[3] = {0.5, 0.5, 0.5};
  double stddev[3] = {0.5, 0.5, 0.5};
};

// [N,3,H,W] in [0,1] -> standardized copy (pure value op, not on the tape).
Tensor normalize_pixels(const Tensor& pixels, const PixelNorm& norm);

}  // namespace rkiqt::data
