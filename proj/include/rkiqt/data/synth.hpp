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

#include "rkiqt/core/rng.hpp"
#include "rkiqt/data/manifest.hpp"
#include "rkiqt/image/image.hpp"

namespace rkiqt::data {

// Synthetic corpus with a known quality ordering. Level 0 is the pristine
// base image (shared across families); severity grows with level:
//   blur:  sigma = 0.8 * level
//   noise: sigma = 7 * level            (0..255 scale)
//   jpeg:  quality = round(60 / 2^(level-1)), floor 2
// Labels are linear in level: mos = mos_max * (1 - level / (levels-1)).
struct SynthConfig {
  int bases = 20;
  int levels = 5;  // counting level 0
  std::vector<std::string> families = {"blur", "noise", "jpeg"};
  int base_size = 96;
  std::uint64_t seed = 0;
  double mos_max = 100.0;
};

struct SynthResult {
  DatasetManifest manifest;
  ReferencePool refs;
  std::string manifest_path;
  std::string refs_path;
};

// Writes images + manifest.csv + refs.csv under out_dir.
SynthResult synthesize_toy_dataset(const SynthConfig& cfg,
                                   const std::string& out_dir);

// Procedural pristine image: smooth color field + soft shapes + texture.
Image8 make_base_image(int size, Rng& rng);

double synth_mos(const SynthConfig& cfg, int level);
double blur_sigma_for_level(int level);
double noise_sigma_for_level(int level);
int jpeg_quality_for_level(int level);

}  // namespace rkiqt::data
