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

#include "rkiqt/image/image.hpp"

namespace rkiqt {

// Baseline sequential JPEG, 4:4:4, standard quantization and Huffman tables,
// quality 1..100 with the usual 5000/q | 200-2q table scaling.
void save_jpeg(const Image8& img, const std::string& path, int quality);

// Decodes baseline files with 1x1 sampling factors (what save_jpeg emits).
Image8 load_jpeg(const std::string& path);

// In-memory equivalent of save_jpeg + load_jpeg: the DCT/quantize/dequantize
// round trip without the (lossless) entropy coding. Bit-identical to going
// through a file.
Image8 jpeg_quantize(const Image8& img, int quality);

}  // namespace rkiqt
