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

#include "rkiqt/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rkiqt/core/error.hpp"
#include "rkiqt/image/distort.hpp"
#include "rkiqt/image/jpeg.hpp"

namespace rkiqt::data {

double synth_mos(const SynthConfig& cfg, int level) {
  if (cfg.levels <= 1) return cfg.mos_max;
  return cfg.mos_max * (1.0 - double(level) / double(cfg.levels - 1));
}

double blur_sigma_for_level(int level) { return 0.8 * level; }
double noise_sigma_for_level(int level) { return 12.0 * level; }
int jpeg_quality_for_level(int level) {
  return std::max(2, int(std::lround(60.0 / double(1 << (level - 1)))));
}

Image8 make_base_image(int size, Rng& rng) {
  std::vector<double> plane(std::size_t(3) * size * size, 128.0);
  const double tau = 2.0 * 3.14159265358979323846;

  // gentle low-frequency color field; content must not drown the
  // severity signal the corpus exists to carry
  for (int c = 0; c < 3; ++c) {
    for (int wave = 0; wave < 3; ++wave) {
      const double amp = rng.uniform(4.0, 14.0);
      const double fx = rng.uniform(0.5, 2.5), fy = rng.uniform(0.5, 2.5);
      const double phase = rng.uniform(0.0, tau);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          plane[std::size_t(c) * size * size + std::size_t(y) * size + x] +=
              amp * std::sin(tau * (fx * x + fy * y) / size + phase);
    }
  }

  // soft-edged rectangles: edges respond strongly to blur and blocking
  const int nshapes = 3 + int(rng.uniform_int(3));
  for (int s = 0; s < nshapes; ++s) {
    const int w = int(rng.uniform_int(size / 2)) + size / 8;
    const int h = int(rng.uniform_int(size / 2)) + size / 8;
    const int x0 = int(rng.uniform_int(std::max(1, size - w)));
    const int y0 = int(rng.uniform_int(std::max(1, size - h)));
    double color[3];
    for (double& cc : color) cc = rng.uniform(60.0, 196.0);
    for (int y = y0; y < std::min(size, y0 + h); ++y)
      for (int x = x0; x < std::min(size, x0 + w); ++x)
        for (int c = 0; c < 3; ++c) {
          double& p =
              plane[std::size_t(c) * size * size + std::size_t(y) * size + x];
          p = 0.55 * p + 0.45 * color[c];
        }
  }

  // strong mid/high-frequency texture: a checkered sinusoid grid plus grain,
  // shared across channels so it reads as luminance detail
  {
    const double texture = rng.uniform(20.0, 30.0);
    const double fx = rng.uniform(12.0, 20.0), fy = rng.uniform(12.0, 20.0);
    const double phase = rng.uniform(0.0, tau);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double v =
            texture * std::sin(tau * fx * x / size + phase) *
                std::sin(tau * fy * y / size) +
            texture * 0.6 * rng.normal();
        for (int c = 0; c < 3; ++c)
          plane[std::size_t(c) * size * size + std::size_t(y) * size + x] += v;
      }
  }

  Image8 img;
  img.width = size;
  img.height = size;
  img.pixels.resize(std::size_t(3) * size * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::uint8_t(std::clamp(
            std::lround(plane[std::size_t(c) * size * size +
                              std::size_t(y) * size + x]),
            0l, 255l));
  return img;
}

SynthResult synthesize_toy_dataset(const SynthConfig& cfg,
                                   const std::string& out_dir) {
  check(cfg.bases >= 1 && cfg.levels >= 1, Err::InvalidArgument,
        "synth: need at least one base and one level");
  check(!cfg.families.empty(), Err::InvalidArgument, "synth: no families");
  for (const auto& f : cfg.families)
    check(f == "blur" || f == "noise" || f == "jpeg", Err::InvalidArgument,
          "synth: unknown distortion family `" + f + "`");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "imgs", ec);
  check(!ec, Err::UnwritableDir, "cannot create output dir: " + out_dir);

  SynthResult result;
  Rng base_rng(derive_seed(cfg.seed, "synth"));

  char name[128];
  for (int b = 0; b < cfg.bases; ++b) {
    const Image8 base = make_base_image(cfg.base_size, base_rng);
    std::snprintf(name, sizeof(name), "imgs/b%03d_l0.ppm", b);
    const std::string pristine_rel = name;
    const std::string pristine_path = out_dir + "/" + pristine_rel;
    save_ppm(base, pristine_path);
    result.refs.paths.push_back(pristine_path);

    for (const auto& family : cfg.families) {
      for (int level = 0; level < cfg.levels; ++level) {
        std::string path;
        if (level == 0) {
          path = pristine_path;  // identity distortion, shared file
        } else if (family == "blur") {
          const Image8 img = gaussian_blur(base, blur_sigma_for_level(level));
          std::snprintf(name, sizeof(name), "imgs/b%03d_blur_l%d.ppm", b, level);
          path = out_dir + "/" + name;
          save_ppm(img, path);
        } else if (family == "noise") {
          const auto seed =
              derive_seed(cfg.seed, "synth_noise",
                          std::uint64_t(b) * 1000 + std::uint64_t(level));
          const Image8 img =
              add_gaussian_noise(base, noise_sigma_for_level(level), seed);
          std::snprintf(name, sizeof(name), "imgs/b%03d_noise_l%d.ppm", b,
                        level);
          path = out_dir + "/" + name;
          save_ppm(img, path);
        } else {  // jpeg: the container applies the distortion
          std::snprintf(name, sizeof(name), "imgs/b%03d_jpeg_l%d.jpg", b, level);
          path = out_dir + "/" + name;
          save_jpeg(base, path, jpeg_quality_for_level(level));
        }
        std::snprintf(name, sizeof(name), "b%03d_%s_l%d", b, family.c_str(),
                      level);
        result.manifest.records.push_back(
            ImageRecord{name, path, synth_mos(cfg, level)});
      }
    }
  }

  result.manifest_path = out_dir + "/manifest.csv";
  result.refs_path = out_dir + "/refs.csv";
  write_manifest(result.manifest, result.manifest_path);
  write_reference_pool(result.refs, result.refs_path);
  return result;
}

}  // namespace rkiqt::data
