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

#include "rkiqt/data/crops.hpp"

namespace rkiqt::data {

namespace {

void copy_crop(const Image8& img, int y0, int x0, int crop, Scalar* dst) {
  // dst: [3, crop, crop], values scaled to [0,1]
  const double inv = 1.0 / 255.0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < crop; ++y)
      for (int x = 0; x < crop; ++x)
        dst[(c * crop + y) * crop + x] = img.at(y0 + y, x0 + x, c) * inv;
}

}  // namespace

PatchBatch crop_patches(const Image8& img, const std::string& id, double mos,
                        int crops_per_image, int crop_size, Rng& rng) {
  check(img.width >= crop_size && img.height >= crop_size, Err::ImageTooSmall,
        "image " + id + " (" + std::to_string(img.width) + "x" +
            std::to_string(img.height) + ") smaller than crop " +
            std::to_string(crop_size));
  check(crops_per_image >= 1, Err::InvalidArgument, "crops_per_image < 1");

  PatchBatch batch;
  batch.pixels =
      Tensor::zeros({crops_per_image, 3, crop_size, crop_size});
  const idx_t stride = idx_t(3) * crop_size * crop_size;
  for (int i = 0; i < crops_per_image; ++i) {
    const int y0 = int(rng.uniform_int(img.height - crop_size + 1));
    const int x0 = int(rng.uniform_int(img.width - crop_size + 1));
    copy_crop(img, y0, x0, crop_size, batch.pixels.data().data() + i * stride);
    batch.sources.push_back(PatchSource{id, y0, x0});
    batch.mos.push_back(mos);
  }
  return batch;
}

PatchBatch crop_patches(const ImageRecord& record, int crops_per_image,
                        int crop_size, Rng& rng) {
  const Image8 img = load_image(record.path);
  return crop_patches(img, record.id, record.mos, crops_per_image, crop_size,
                      rng);
}

PatchBatch center_crop(const Image8& img, const std::string& id, double mos,
                       int crop_size) {
  check(img.width >= crop_size && img.height >= crop_size, Err::ImageTooSmall,
        "image " + id + " smaller than crop");
  PatchBatch batch;
  batch.pixels = Tensor::zeros({1, 3, crop_size, crop_size});
  const int y0 = (img.height - crop_size) / 2;
  const int x0 = (img.width - crop_size) / 2;
  copy_crop(img, y0, x0, crop_size, batch.pixels.data().data());
  batch.sources.push_back(PatchSource{id, y0, x0});
  batch.mos.push_back(mos);
  return batch;
}

PatchBatch concat_batches(const std::vector<PatchBatch>& batches) {
  check(!batches.empty(), Err::InvalidArgument, "concat_batches: empty list");
  PatchBatch out;
  std::vector<Tensor> px;
  for (const auto& b : batches) {
    px.push_back(b.pixels);
    out.sources.insert(out.sources.end(), b.sources.begin(), b.sources.end());
    out.mos.insert(out.mos.end(), b.mos.begin(), b.mos.end());
  }
  out.pixels = concat(px, 0);
  return out;
}

Tensor normalize_pixels(const Tensor& pixels, const PixelNorm& norm) {
  check(pixels.ndim() == 4 && pixels.dim(1) == 3, Err::ShapeMismatch,
        "normalize_pixels expects [N,3,H,W]");
  Tensor out = Tensor::zeros(pixels.shape());
  const idx_t N = pixels.dim(0), HW = pixels.dim(2) * pixels.dim(3);
  const Scalar* src = pixels.data().data();
  Scalar* dst = out.data().data();
  for (idx_t n = 0; n < N; ++n)
    for (int c = 0; c < 3; ++c) {
      const Scalar m = norm.mean[c], inv = 1.0 / norm.stddev[c];
      const Scalar* s = src + (n * 3 + c) * HW;
      Scalar* d = dst + (n * 3 + c) * HW;
      for (idx_t i = 0; i < HW; ++i) d[i] = (s[i] - m) * inv;
    }
  return out;
}

}  // namespace rkiqt::data
