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

#include "rkiqt/image/image.hpp"

#include <fstream>

#include "rkiqt/core/error.hpp"
#include "rkiqt/image/jpeg.hpp"

namespace rkiqt {

Image8 Image8::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                      std::uint8_t b) {
  Image8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(std::size_t(3 * w * h));
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

void save_ppm(const Image8& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), Err::UnwritableDir, "cannot write image: " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            std::streamsize(img.pixels.size()));
  check(out.good(), Err::UnwritableDir, "short write: " + path);
}

namespace {

// PPM header token, skipping whitespace and # comments
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(char(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(char(c));
  return tok;
}

}  // namespace

Image8 load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Err::MissingFile, "cannot open image: " + path);
  check(ppm_token(in) == "P6", Err::DecodeError, "not a P6 ppm: " + path);
  Image8 img;
  try {
    img.width = std::stoi(ppm_token(in));
    img.height = std::stoi(ppm_token(in));
    const int maxval = std::stoi(ppm_token(in));
    check(maxval == 255, Err::DecodeError, "unsupported ppm maxval: " + path);
  } catch (const std::logic_error&) {
    fail(Err::DecodeError, "malformed ppm header: " + path);
  }
  check(img.width > 0 && img.height > 0, Err::DecodeError,
        "bad ppm dimensions: " + path);
  img.pixels.resize(std::size_t(3 * img.width * img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          std::streamsize(img.pixels.size()));
  check(in.gcount() == std::streamsize(img.pixels.size()), Err::DecodeError,
        "truncated ppm: " + path);
  return img;
}

Image8 load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Err::MissingFile, "cannot open image: " + path);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  in.close();
  if (magic[0] == 'P' && magic[1] == '6') return load_ppm(path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(path);
  fail(Err::DecodeError, "unrecognized image format: " + path);
}

}  // namespace rkiqt
