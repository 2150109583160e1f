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

namespace rkiqt {

// Interleaved 8-bit RGB, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  bool empty() const { return pixels.empty(); }
  std::uint8_t& at(int y, int x, int c) {
    return pixels[std::size_t(3 * (y * width + x) + c)];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[std::size_t(3 * (y * width + x) + c)];
  }
  static Image8 filled(int w, int h, std::uint8_t r, std::uint8_t g,
                       std::uint8_t b);
};

// Binary PPM (P6, maxval 255) is the lossless container.
void save_ppm(const Image8& img, const std::string& path);
Image8 load_ppm(const std::string& path);

// Dispatches on magic bytes: P6 -> PPM, FFD8 -> JPEG.
Image8 load_image(const std::string& path);

}  // namespace rkiqt
