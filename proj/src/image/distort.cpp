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

#include "rkiqt/image/distort.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rkiqt/core/error.hpp"
#include "rkiqt/core/rng.hpp"

namespace rkiqt {

namespace {
std::uint8_t clamp_u8(double v) {
  return std::uint8_t(std::clamp(std::lround(v), 0l, 255l));
}
}  // namespace

Image8 gaussian_blur(const Image8& img, double sigma) {
  check(sigma >= 0.0, Err::InvalidArgument, "gaussian_blur: negative sigma");
  if (sigma == 0.0) return img;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(std::size_t(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[std::size_t(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[std::size_t(i + radius)];
  }
  for (auto& k : kernel) k /= sum;

  const int w = img.width, h = img.height;
  std::vector<double> tmp(std::size_t(3 * w * h));
  // horizontal
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int xi = std::clamp(x + i, 0, w - 1);
          acc += kernel[std::size_t(i + radius)] * img.at(y, xi, c);
        }
        tmp[std::size_t(3 * (y * w + x) + c)] = acc;
      }
  // vertical
  Image8 out;
  out.width = w;
  out.height = h;
  out.pixels.resize(std::size_t(3 * w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int yi = std::clamp(y + i, 0, h - 1);
          acc += kernel[std::size_t(i + radius)] *
                 tmp[std::size_t(3 * (yi * w + x) + c)];
        }
        out.pixels[std::size_t(3 * (y * w + x) + c)] = clamp_u8(acc);
      }
  return out;
}

Image8 add_gaussian_noise(const Image8& img, double sigma, std::uint64_t seed) {
  check(sigma >= 0.0, Err::InvalidArgument, "add_gaussian_noise: negative sigma");
  Image8 out = img;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (auto& p : out.pixels) p = clamp_u8(double(p) + sigma * rng.normal());
  return out;
}

double high_frequency_energy(const Image8& img) {
  const int w = img.width, h = img.height;
  std::vector<double> luma(std::size_t(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      luma[std::size_t(y) * w + x] = 0.299 * img.at(y, x, 0) +
                                     0.587 * img.at(y, x, 1) +
                                     0.114 * img.at(y, x, 2);
  // remove DC so the ratio is about structure, not brightness
  double mean = 0;
  for (double v : luma) mean += v;
  mean /= double(luma.size());
  for (double& v : luma) v -= mean;

  // separable DFT: rows then columns
  const double tau = 2.0 * 3.14159265358979323846;
  std::vector<double> re1(luma.size()), im1(luma.size());
  for (int y = 0; y < h; ++y)
    for (int fx = 0; fx < w; ++fx) {
      double re = 0, im = 0;
      for (int x = 0; x < w; ++x) {
        const double a = tau * fx * x / w;
        re += luma[std::size_t(y) * w + x] * std::cos(a);
        im -= luma[std::size_t(y) * w + x] * std::sin(a);
      }
      re1[std::size_t(y) * w + fx] = re;
      im1[std::size_t(y) * w + fx] = im;
    }
  double total = 0, high = 0;
  for (int fy = 0; fy < h; ++fy)
    for (int fx = 0; fx < w; ++fx) {
      double re = 0, im = 0;
      for (int y = 0; y < h; ++y) {
        const double a = tau * fy * y / h;
        const double cr = std::cos(a), sr = std::sin(a);
        re += re1[std::size_t(y) * w + fx] * cr + im1[std::size_t(y) * w + fx] * sr;
        im += -re1[std::size_t(y) * w + fx] * sr + im1[std::size_t(y) * w + fx] * cr;
      }
      const double e = re * re + im * im;
      total += e;
      const int ux = std::min(fx, w - fx);  // wrapped frequency
      const int uy = std::min(fy, h - fy);
      if (ux >= w / 8 || uy >= h / 8) high += e;
    }
  return total > 0 ? high / total : 0.0;
}

}  // namespace rkiqt
