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

#include "rkiqt/image/image.hpp"

namespace rkiqt {

// Separable Gaussian, radius = ceil(3 sigma), edge replication.
Image8 gaussian_blur(const Image8& img, double sigma);

// Additive white Gaussian noise on the 0..255 scale, clamped.
Image8 add_gaussian_noise(const Image8& img, double sigma, std::uint64_t seed);

// Fraction of spectral energy above |f| >= nyquist/4 of the luma plane,
// via separable row-column DFT. Diagnostic for blur severity.
double high_frequency_energy(const Image8& img);

}  // namespace rkiqt
