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

#include "rkiqt/eval/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace rkiqt::eval {

SimilarityMatrix token_similarity(const student::StudentModel& model,
                                  const data::DatasetManifest& manifest,
                                  const data::PixelNorm& norm,
                                  std::uint64_t seed, ImageCache* cache) {
  check(!manifest.empty(), Err::EmptyManifest, "token_similarity: empty manifest");
  NoGradGuard guard;
  ImageCache local;
  ImageCache& images = cache ? *cache : local;

  SimilarityMatrix acc{};
  for (const auto& rec : manifest.records) {
    Rng rng(derive_seed(seed, "tok_sim", fnv1a64(rec.id)));
    auto batch = data::crop_patches(images.get(rec.path), rec.id, rec.mos, 1,
                                    model.config().image_size, rng);
    const auto out = model.forward(data::normalize_pixels(batch.pixels, norm));
    const auto& d = out.decoded.data();  // [1, 3, D]
    const int D = model.config().dim;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double dot = 0, na = 0, nb = 0;
        for (int k = 0; k < D; ++k) {
          const double va = d[std::size_t(a * D + k)];
          const double vb = d[std::size_t(b * D + k)];
          dot += va * vb;
          na += va * va;
          nb += vb * vb;
        }
        acc[std::size_t(a)][std::size_t(b)] +=
            dot / std::max(1e-12, std::sqrt(na * nb));
      }
  }
  for (auto& row : acc)
    for (auto& v : row) v /= double(manifest.size());
  for (int i = 0; i < 3; ++i) acc[std::size_t(i)][std::size_t(i)] = 1.0;
  return acc;
}

Heatmap saliency_map(const student::StudentModel& model, const Image8& image,
                     const data::PixelNorm& norm) {
  const int S = model.config().image_size;
  check(image.width >= S && image.height >= S, Err::ImageTooSmall,
        "saliency: image smaller than model crop");

  auto batch = data::center_crop(image, "saliency", 0.0, S);
  Tensor pixels = data::normalize_pixels(batch.pixels, norm);

  auto out = model.forward(pixels);
  out.patch_feats.retain_grad();
  backward(reshape(out.y_cls, {1}));
  check(out.patch_feats.has_grad(), Err::Internal,
        "saliency: no gradient reached the patch features");

  const int g = model.config().grid();
  const int D = model.config().dim;
  const auto& feats = out.patch_feats.data();   // [1, n, D]
  const auto& grads = out.patch_feats.grad();

  // channel weights: mean gradient over tokens
  std::vector<double> alpha(std::size_t(D), 0.0);
  for (int t = 0; t < g * g; ++t)
    for (int d = 0; d < D; ++d)
      alpha[std::size_t(d)] += grads[std::size_t(t * D + d)];
  for (auto& a : alpha) a /= double(g * g);

  std::vector<double> cam(std::size_t(g) * g, 0.0);
  for (int t = 0; t < g * g; ++t) {
    double v = 0;
    for (int d = 0; d < D; ++d)
      v += alpha[std::size_t(d)] * feats[std::size_t(t * D + d)];
    cam[std::size_t(t)] = std::max(0.0, v);
  }

  // bilinear resample to the input size, then normalize to [0,1]
  Heatmap map;
  map.width = image.width;
  map.height = image.height;
  map.values.assign(std::size_t(image.width) * image.height, 0.0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double gy = (y + 0.5) / image.height * g - 0.5;
      const double gx = (x + 0.5) / image.width * g - 0.5;
      const int y0 = std::clamp(int(std::floor(gy)), 0, g - 1);
      const int x0 = std::clamp(int(std::floor(gx)), 0, g - 1);
      const int y1 = std::min(y0 + 1, g - 1);
      const int x1 = std::min(x0 + 1, g - 1);
      const double fy = std::clamp(gy - y0, 0.0, 1.0);
      const double fx = std::clamp(gx - x0, 0.0, 1.0);
      const double v =
          (1 - fy) * ((1 - fx) * cam[std::size_t(y0 * g + x0)] +
                      fx * cam[std::size_t(y0 * g + x1)]) +
          fy * ((1 - fx) * cam[std::size_t(y1 * g + x0)] +
                fx * cam[std::size_t(y1 * g + x1)]);
      map.values[std::size_t(y) * image.width + x] = v;
    }

  const auto [mn, mx] =
      std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *mn, hi = *mx;
  if (hi - lo < 1e-12) {
    std::fill(map.values.begin(), map.values.end(), 0.0);
  } else {
    for (auto& v : map.values) v = (v - lo) / (hi - lo);
  }
  return map;
}

Image8 saliency_overlay(const Image8& image, const Heatmap& map) {
  check(image.width == map.width && image.height == map.height,
        Err::ShapeMismatch, "overlay: size mismatch");
  Image8 out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double h = map.values[std::size_t(y) * map.width + x];
      const double luma = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                          0.114 * image.at(y, x, 2);
      out.at(y, x, 0) = std::uint8_t(
          std::clamp(std::lround(luma * (1 - h) + 255.0 * h), 0l, 255l));
      out.at(y, x, 1) = std::uint8_t(std::clamp(std::lround(luma * (1 - h)), 0l, 255l));
      out.at(y, x, 2) = std::uint8_t(std::clamp(std::lround(luma * (1 - h)), 0l, 255l));
    }
  return out;
}

}  // namespace rkiqt::eval
