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

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "rkiqt/core/rng.hpp"
#include "rkiqt/data/synth.hpp"
#include "rkiqt/image/distort.hpp"
#include "rkiqt/image/image.hpp"
#include "rkiqt/image/jpeg.hpp"

using namespace rkiqt;

namespace {

Image8 random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(std::size_t(3 * w * h));
  for (auto& p : img.pixels) p = std::uint8_t(rng.uniform_int(256));
  return img;
}

std::string temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("rkiqt_img_test_" + std::to_string(++counter));
  std::filesystem::create_directories(dir);
  return dir.string();
}

double mean_abs_diff(const Image8& a, const Image8& b) {
  REQUIRE(a.pixels.size() == b.pixels.size());
  double s = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    s += std::abs(int(a.pixels[i]) - int(b.pixels[i]));
  return s / double(a.pixels.size());
}

}  // namespace

TEST_CASE("ppm round trip is lossless") {
  const std::string dir = temp_dir();
  const Image8 img = random_image(37, 23, 5);
  save_ppm(img, dir + "/a.ppm");
  const Image8 back = load_ppm(dir + "/a.ppm");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
  CHECK(load_image(dir + "/a.ppm").pixels == img.pixels);
}

TEST_CASE("jpeg file round trip equals the in-memory quantization pipeline") {
  // Entropy coding is lossless, so decode(encode(x,q)) must equal
  // jpeg_quantize(x,q) byte for byte.
  const std::string dir = temp_dir();
  Rng rng(11);
  for (int q : {95, 75, 50, 25, 8}) {
    const int w = 40 + int(rng.uniform_int(40));
    const int h = 40 + int(rng.uniform_int(40));
    const Image8 img = random_image(w, h, std::uint64_t(q) * 77 + 1);
    const std::string path = dir + "/q" + std::to_string(q) + ".jpg";
    save_jpeg(img, path, q);
    const Image8 decoded = load_jpeg(path);
    const Image8 reference = jpeg_quantize(img, q);
    REQUIRE(decoded.width == img.width);
    REQUIRE(decoded.height == img.height);
    CHECK(decoded.pixels == reference.pixels);
  }
}

TEST_CASE("jpeg error grows as quality drops") {
  Rng rng(3);
  data::SynthConfig cfg;
  const Image8 img = data::make_base_image(64, rng);
  const double e90 = mean_abs_diff(img, jpeg_quantize(img, 90));
  const double e50 = mean_abs_diff(img, jpeg_quantize(img, 50));
  const double e10 = mean_abs_diff(img, jpeg_quantize(img, 10));
  CHECK(e90 < e50);
  CHECK(e50 < e10);
  CHECK(e90 < 6.0);  // near-transparent at q90
}

TEST_CASE("gaussian blur removes high-frequency energy monotonically") {
  Rng rng(7);
  const Image8 img = data::make_base_image(48, rng);
  double prev = high_frequency_energy(img);
  for (int level = 1; level <= 3; ++level) {
    const double e =
        high_frequency_energy(gaussian_blur(img, data::blur_sigma_for_level(level)));
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("noise is reproducible and bounded") {
  const Image8 img = random_image(16, 16, 9);
  const Image8 a = add_gaussian_noise(img, 10.0, 1234);
  const Image8 b = add_gaussian_noise(img, 10.0, 1234);
  const Image8 c = add_gaussian_noise(img, 10.0, 4321);
  CHECK(a.pixels == b.pixels);
  CHECK(a.pixels != c.pixels);
}
