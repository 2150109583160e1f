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

// Minimal baseline JPEG. The encoder and the in-memory quantizer share the
// same DCT/quantization path, so decode(encode(x, q)) == jpeg_quantize(x, q)
// exactly: entropy coding is lossless.

#include "rkiqt/image/jpeg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rkiqt/core/error.hpp"

namespace rkiqt {
namespace {

// ---- tables ---------------------------------------------------------------

const int kZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

const int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const int kChromaQuant[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

const unsigned char kDcLumaBits[17] = {0, 0, 1, 5, 1, 1, 1, 1, 1,
                                       1, 0, 0, 0, 0, 0, 0, 0};
const unsigned char kDcLumaVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

const unsigned char kDcChromaBits[17] = {0, 0, 3, 1, 1, 1, 1, 1, 1,
                                         1, 1, 1, 0, 0, 0, 0, 0};
const unsigned char kDcChromaVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

const unsigned char kAcLumaBits[17] = {0, 0, 2, 1, 3, 3, 2, 4, 3,
                                       5, 5, 4, 4, 0, 0, 1, 0x7d};
const unsigned char kAcLumaVals[162] = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08,
    0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3,
    0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
    0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9,
    0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4,
    0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};

const unsigned char kAcChromaBits[17] = {0, 0, 2, 1, 2, 4, 4, 3, 4,
                                         7, 5, 4, 4, 0, 1, 2, 0x77};
const unsigned char kAcChromaVals[162] = {
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41,
    0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1,
    0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26,
    0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74,
    0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a,
    0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
    0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7,
    0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda,
    0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4,
    0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};

void scaled_quant_table(const int* base, int quality, int* out) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  for (int i = 0; i < 64; ++i)
    out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
}

// ---- DCT -------------------------------------------------------------------

struct DctBasis {
  double c[8][8];  // c[u][x] = C(u)/2 * cos((2x+1)u pi / 16)
  DctBasis() {
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x)
        c[u][x] = 0.5 * (u == 0 ? 1.0 / std::sqrt(2.0) : 1.0) *
                  std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
  }
};
const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

void fdct8x8(const double* in, double* out) {
  const auto& b = basis();
  double tmp[64];
  for (int y = 0; y < 8; ++y)  // rows
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += in[y * 8 + x] * b.c[u][x];
      tmp[y * 8 + u] = s;
    }
  for (int u = 0; u < 8; ++u)  // cols
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += tmp[y * 8 + u] * b.c[v][y];
      out[v * 8 + u] = s;
    }
}

void idct8x8(const double* in, double* out) {
  const auto& b = basis();
  double tmp[64];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int u = 0; u < 8; ++u) s += in[v * 8 + u] * b.c[u][x];
      tmp[v * 8 + x] = s;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += tmp[v * 8 + x] * b.c[v][y];
      out[y * 8 + x] = s;
    }
}

// ---- color -----------------------------------------------------------------

std::uint8_t clamp_u8(double v) {
  return std::uint8_t(std::clamp(std::lround(v), 0l, 255l));
}

void rgb_to_ycbcr(const Image8& img, std::vector<double>& y,
                  std::vector<double>& cb, std::vector<double>& cr) {
  const std::size_t n = std::size_t(img.width) * std::size_t(img.height);
  y.resize(n);
  cb.resize(n);
  cr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.pixels[3 * i], g = img.pixels[3 * i + 1],
                 b = img.pixels[3 * i + 2];
    y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    cb[i] = -0.168735892 * r - 0.331264108 * g + 0.5 * b + 128.0;
    cr[i] = 0.5 * r - 0.418687589 * g - 0.081312411 * b + 128.0;
  }
}

Image8 ycbcr_to_rgb(const std::vector<double>& y, const std::vector<double>& cb,
                    const std::vector<double>& cr, int w, int h) {
  Image8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(std::size_t(3 * w * h));
  for (std::size_t i = 0; i < std::size_t(w) * std::size_t(h); ++i) {
    const double yy = y[i], cbv = cb[i] - 128.0, crv = cr[i] - 128.0;
    img.pixels[3 * i] = clamp_u8(yy + 1.402 * crv);
    img.pixels[3 * i + 1] = clamp_u8(yy - 0.344136286 * cbv - 0.714136286 * crv);
    img.pixels[3 * i + 2] = clamp_u8(yy + 1.772 * cbv);
  }
  return img;
}

// ---- shared quantization round trip -----------------------------------------

// plane -> quantized coefficients (zigzag order per block, blocks row-major)
void quantize_plane(const std::vector<double>& plane, int w, int h,
                    const int* qtab, std::vector<int>& coeffs) {
  const int bw = (w + 7) / 8, bh = (h + 7) / 8;
  coeffs.assign(std::size_t(bw) * std::size_t(bh) * 64, 0);
  double block[64], freq[64];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      for (int yy = 0; yy < 8; ++yy)
        for (int xx = 0; xx < 8; ++xx) {
          const int sy = std::min(by * 8 + yy, h - 1);
          const int sx = std::min(bx * 8 + xx, w - 1);  // edge replication
          block[yy * 8 + xx] = plane[std::size_t(sy) * w + sx] - 128.0;
        }
      fdct8x8(block, freq);
      int* dst = coeffs.data() + (std::size_t(by) * bw + bx) * 64;
      for (int i = 0; i < 64; ++i)
        dst[i] = int(std::lround(freq[kZigzag[i]] / qtab[i]));
    }
  }
}

void dequantize_plane(const std::vector<int>& coeffs, int w, int h,
                      const int* qtab, std::vector<double>& plane) {
  const int bw = (w + 7) / 8, bh = (h + 7) / 8;
  plane.assign(std::size_t(w) * std::size_t(h), 0.0);
  double freq[64], block[64];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int* src = coeffs.data() + (std::size_t(by) * bw + bx) * 64;
      for (int i = 0; i < 64; ++i) freq[kZigzag[i]] = double(src[i] * qtab[i]);
      idct8x8(freq, block);
      for (int yy = 0; yy < 8; ++yy) {
        const int sy = by * 8 + yy;
        if (sy >= h) break;
        for (int xx = 0; xx < 8; ++xx) {
          const int sx = bx * 8 + xx;
          if (sx >= w) break;
          plane[std::size_t(sy) * w + sx] = block[yy * 8 + xx] + 128.0;
        }
      }
    }
  }
}

// ---- entropy coding ----------------------------------------------------------

struct HuffEncoder {
  std::uint16_t code[256];
  std::uint8_t size[256];
  HuffEncoder(const unsigned char* bits, const unsigned char* vals) {
    std::memset(size, 0, sizeof(size));
    int k = 0;
    std::uint16_t c = 0;
    for (int len = 1; len <= 16; ++len) {
      for (int i = 0; i < bits[len]; ++i, ++k) {
        code[vals[k]] = c++;
        size[vals[k]] = std::uint8_t(len);
      }
      c <<= 1;
    }
  }
};

struct BitWriter {
  std::vector<std::uint8_t>& out;
  std::uint32_t acc = 0;
  int nbits = 0;
  explicit BitWriter(std::vector<std::uint8_t>& o) : out(o) {}
  void put(std::uint32_t bits, int n) {
    acc = (acc << n) | (bits & ((1u << n) - 1));
    nbits += n;
    while (nbits >= 8) {
      const std::uint8_t byte = std::uint8_t((acc >> (nbits - 8)) & 0xff);
      out.push_back(byte);
      if (byte == 0xff) out.push_back(0x00);
      nbits -= 8;
    }
  }
  void flush() {
    while (nbits != 0) put(1, 1);  // pad to byte boundary with 1s
  }
};

int bit_category(int v) {
  int a = v < 0 ? -v : v;
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

void encode_block(BitWriter& bw, const int* zz, int& prev_dc,
                  const HuffEncoder& dc, const HuffEncoder& ac) {
  const int diff = zz[0] - prev_dc;
  prev_dc = zz[0];
  const int s = bit_category(diff);
  bw.put(dc.code[s], dc.size[s]);
  if (s) bw.put(std::uint32_t(diff < 0 ? diff + (1 << s) - 1 : diff), s);

  int run = 0;
  for (int i = 1; i < 64; ++i) {
    if (zz[i] == 0) {
      ++run;
      continue;
    }
    while (run > 15) {
      bw.put(ac.code[0xf0], ac.size[0xf0]);
      run -= 16;
    }
    const int as = bit_category(zz[i]);
    const int sym = (run << 4) | as;
    bw.put(ac.code[sym], ac.size[sym]);
    bw.put(std::uint32_t(zz[i] < 0 ? zz[i] + (1 << as) - 1 : zz[i]), as);
    run = 0;
  }
  if (run > 0) bw.put(ac.code[0x00], ac.size[0x00]);  // EOB
}

void put16(std::vector<std::uint8_t>& v, int x) {
  v.push_back(std::uint8_t(x >> 8));
  v.push_back(std::uint8_t(x & 0xff));
}

void put_marker(std::vector<std::uint8_t>& v, std::uint8_t m) {
  v.push_back(0xff);
  v.push_back(m);
}

// ---- decoder ----------------------------------------------------------------

struct HuffDecoder {
  int mincode[17], maxcode[17], valptr[17];
  std::vector<unsigned char> vals;
  bool valid = false;

  void build(const unsigned char* bits, const unsigned char* huffval,
             int nvals) {
    vals.assign(huffval, huffval + nvals);
    int code = 0, k = 0;
    for (int len = 1; len <= 16; ++len) {
      valptr[len] = k;
      mincode[len] = code;
      code += bits[len];
      k += bits[len];
      maxcode[len] = code - 1;
      if (bits[len] == 0) maxcode[len] = -1;
      code <<= 1;
    }
    valid = true;
  }
};

struct BitReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;
  std::uint32_t acc = 0;
  int nbits = 0;
  bool hit_marker = false;

  int next_bit() {
    if (nbits == 0) {
      if (pos >= size) fail(Err::DecodeError, "jpeg: bitstream exhausted");
      std::uint8_t b = data[pos++];
      if (b == 0xff) {
        if (pos >= size) fail(Err::DecodeError, "jpeg: dangling 0xFF");
        const std::uint8_t m = data[pos++];
        if (m == 0x00) {
          // stuffed byte
        } else {
          hit_marker = true;
          fail(Err::DecodeError, "jpeg: unexpected marker in entropy data");
        }
      }
      acc = b;
      nbits = 8;
    }
    --nbits;
    return int((acc >> nbits) & 1);
  }

  int receive(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | next_bit();
    return v;
  }
};

int huff_decode(BitReader& br, const HuffDecoder& h) {
  int code = br.next_bit();
  for (int len = 1; len <= 16; ++len) {
    if (h.maxcode[len] >= 0 && code <= h.maxcode[len])
      return h.vals[std::size_t(h.valptr[len] + code - h.mincode[len])];
    code = (code << 1) | br.next_bit();
  }
  fail(Err::DecodeError, "jpeg: invalid huffman code");
}

int extend(int v, int s) { return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v; }

}  // namespace

// ---- public API ---------------------------------------------------------------

void save_jpeg(const Image8& img, const std::string& path, int quality) {
  check(!img.empty(), Err::InvalidArgument, "save_jpeg: empty image");
  int qy[64], qc[64];
  scaled_quant_table(kLumaQuant, quality, qy);
  scaled_quant_table(kChromaQuant, quality, qc);

  std::vector<double> py, pcb, pcr;
  rgb_to_ycbcr(img, py, pcb, pcr);
  std::vector<int> cy, ccb, ccr;
  quantize_plane(py, img.width, img.height, qy, cy);
  quantize_plane(pcb, img.width, img.height, qc, ccb);
  quantize_plane(pcr, img.width, img.height, qc, ccr);

  std::vector<std::uint8_t> out;
  out.reserve(std::size_t(img.width) * std::size_t(img.height));
  put_marker(out, 0xd8);  // SOI

  put_marker(out, 0xe0);  // APP0 / JFIF
  put16(out, 16);
  const char jfif[5] = {'J', 'F', 'I', 'F', 0};
  out.insert(out.end(), jfif, jfif + 5);
  out.push_back(1);
  out.push_back(1);
  out.push_back(0);
  put16(out, 1);
  put16(out, 1);
  out.push_back(0);
  out.push_back(0);

  for (int t = 0; t < 2; ++t) {  // DQT
    put_marker(out, 0xdb);
    put16(out, 67);
    out.push_back(std::uint8_t(t));
    const int* q = t == 0 ? qy : qc;
    for (int i = 0; i < 64; ++i) out.push_back(std::uint8_t(q[i]));
  }

  put_marker(out, 0xc0);  // SOF0, 3 components, 1x1 sampling
  put16(out, 17);
  out.push_back(8);
  put16(out, img.height);
  put16(out, img.width);
  out.push_back(3);
  for (int c = 0; c < 3; ++c) {
    out.push_back(std::uint8_t(c + 1));
    out.push_back(0x11);
    out.push_back(c == 0 ? 0 : 1);
  }

  auto write_dht = [&](int cls, int id, const unsigned char* bits,
                       const unsigned char* vals) {
    int n = 0;
    for (int i = 1; i <= 16; ++i) n += bits[i];
    put_marker(out, 0xc4);
    put16(out, 19 + n);
    out.push_back(std::uint8_t((cls << 4) | id));
    for (int i = 1; i <= 16; ++i) out.push_back(bits[i]);
    for (int i = 0; i < n; ++i) out.push_back(vals[i]);
  };
  write_dht(0, 0, kDcLumaBits, kDcLumaVals);
  write_dht(1, 0, kAcLumaBits, kAcLumaVals);
  write_dht(0, 1, kDcChromaBits, kDcChromaVals);
  write_dht(1, 1, kAcChromaBits, kAcChromaVals);

  put_marker(out, 0xda);  // SOS
  put16(out, 12);
  out.push_back(3);
  for (int c = 0; c < 3; ++c) {
    out.push_back(std::uint8_t(c + 1));
    out.push_back(c == 0 ? 0x00 : 0x11);
  }
  out.push_back(0);
  out.push_back(63);
  out.push_back(0);

  const HuffEncoder dcY(kDcLumaBits, kDcLumaVals), acY(kAcLumaBits, kAcLumaVals);
  const HuffEncoder dcC(kDcChromaBits, kDcChromaVals),
      acC(kAcChromaBits, kAcChromaVals);
  BitWriter bw(out);
  const int bwid = (img.width + 7) / 8, bhei = (img.height + 7) / 8;
  int prev[3] = {0, 0, 0};
  for (int by = 0; by < bhei; ++by) {
    for (int bx = 0; bx < bwid; ++bx) {
      const std::size_t off = (std::size_t(by) * bwid + bx) * 64;
      encode_block(bw, cy.data() + off, prev[0], dcY, acY);
      encode_block(bw, ccb.data() + off, prev[1], dcC, acC);
      encode_block(bw, ccr.data() + off, prev[2], dcC, acC);
    }
  }
  bw.flush();
  put_marker(out, 0xd9);  // EOI

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check(f.good(), Err::UnwritableDir, "cannot write jpeg: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  check(f.good(), Err::UnwritableDir, "short jpeg write: " + path);
}

Image8 load_jpeg(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), Err::MissingFile, "cannot open jpeg: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  check(buf.size() > 4 && buf[0] == 0xff && buf[1] == 0xd8, Err::DecodeError,
        "not a jpeg: " + path);

  int qt[4][64] = {};
  bool qt_seen[4] = {};
  HuffDecoder huff_dc[4], huff_ac[4];
  int width = 0, height = 0, ncomp = 0;
  struct Comp {
    int id = 0, qid = 0, dc = 0, ac = 0;
  } comp[3];

  std::size_t pos = 2;
  auto rd16 = [&](std::size_t p) { return (int(buf[p]) << 8) | buf[p + 1]; };

  std::size_t scan_start = 0;
  while (pos + 4 <= buf.size()) {
    check(buf[pos] == 0xff, Err::DecodeError, "jpeg: lost marker sync");
    const std::uint8_t m = buf[pos + 1];
    if (m == 0xd9) break;  // EOI before SOS: broken
    const int seglen = rd16(pos + 2);
    const std::size_t seg = pos + 4;
    check(seg + std::size_t(seglen) - 2 <= buf.size(), Err::DecodeError,
          "jpeg: truncated segment");
    if (m == 0xdb) {  // DQT (possibly several tables per segment)
      std::size_t p = seg;
      while (p < seg + std::size_t(seglen) - 2) {
        const int prec = buf[p] >> 4, id = buf[p] & 0x0f;
        check(prec == 0 && id < 4, Err::DecodeError, "jpeg: bad DQT");
        ++p;
        for (int i = 0; i < 64; ++i) qt[id][i] = buf[p++];
        qt_seen[id] = true;
      }
    } else if (m == 0xc4) {  // DHT
      std::size_t p = seg;
      while (p < seg + std::size_t(seglen) - 2) {
        const int cls = buf[p] >> 4, id = buf[p] & 0x0f;
        check(id < 4, Err::DecodeError, "jpeg: bad DHT id");
        ++p;
        unsigned char bits[17] = {0};
        int n = 0;
        for (int i = 1; i <= 16; ++i) {
          bits[i] = buf[p++];
          n += bits[i];
        }
        check(n <= 256, Err::DecodeError, "jpeg: bad DHT");
        (cls == 0 ? huff_dc[id] : huff_ac[id]).build(bits, &buf[p], n);
        p += std::size_t(n);
      }
    } else if (m == 0xc0) {  // SOF0 baseline
      height = rd16(seg + 1);
      width = rd16(seg + 3);
      ncomp = buf[seg + 5];
      check(buf[seg] == 8, Err::DecodeError, "jpeg: only 8-bit supported");
      check(ncomp == 1 || ncomp == 3, Err::DecodeError,
            "jpeg: unsupported component count");
      for (int c = 0; c < ncomp; ++c) {
        comp[c].id = buf[seg + 6 + 3 * c];
        check(buf[seg + 7 + 3 * c] == 0x11, Err::DecodeError,
              "jpeg: only 1x1 sampling supported");
        comp[c].qid = buf[seg + 8 + 3 * c];
      }
    } else if (m == 0xc2 || (m >= 0xc1 && m <= 0xcf && m != 0xc4 && m != 0xc8 &&
                             m != 0xcc)) {
      fail(Err::DecodeError, "jpeg: only baseline (SOF0) supported");
    } else if (m == 0xda) {  // SOS
      const int ns = buf[seg];
      check(ns == ncomp, Err::DecodeError, "jpeg: scan component mismatch");
      for (int c = 0; c < ns; ++c) {
        const int cid = buf[seg + 1 + 2 * c];
        const int tabs = buf[seg + 2 + 2 * c];
        for (int k = 0; k < ncomp; ++k)
          if (comp[k].id == cid) {
            comp[k].dc = tabs >> 4;
            comp[k].ac = tabs & 0x0f;
          }
      }
      scan_start = seg + std::size_t(seglen) - 2;
      break;
    }
    pos = seg + std::size_t(seglen) - 2;
  }
  check(scan_start != 0 && width > 0 && height > 0, Err::DecodeError,
        "jpeg: missing SOS/SOF");

  const int bwid = (width + 7) / 8, bhei = (height + 7) / 8;
  const auto ncomp_z = std::size_t(ncomp);
  std::vector<std::vector<int>> coeffs(ncomp_z);
  for (auto& c : coeffs) c.assign(std::size_t(bwid) * bhei * 64, 0);

  BitReader br{buf.data(), buf.size()};
  br.pos = scan_start;
  int prev[3] = {0, 0, 0};
  for (int by = 0; by < bhei; ++by) {
    for (int bx = 0; bx < bwid; ++bx) {
      for (int c = 0; c < ncomp; ++c) {
        const HuffDecoder& hdc = huff_dc[comp[c].dc];
        const HuffDecoder& hac = huff_ac[comp[c].ac];
        check(hdc.valid && hac.valid, Err::DecodeError,
              "jpeg: missing huffman table");
        int* zz = coeffs[std::size_t(c)].data() +
                  (std::size_t(by) * bwid + bx) * 64;
        const int s = huff_decode(br, hdc);
        const int diff = s ? extend(br.receive(s), s) : 0;
        prev[c] += diff;
        zz[0] = prev[c];
        for (int k = 1; k < 64;) {
          const int rs = huff_decode(br, hac);
          const int r = rs >> 4, sz = rs & 0x0f;
          if (sz == 0) {
            if (r == 15) {
              k += 16;
              continue;
            }
            break;  // EOB
          }
          k += r;
          check(k < 64, Err::DecodeError, "jpeg: coefficient overrun");
          zz[k++] = extend(br.receive(sz), sz);
        }
      }
    }
  }

  std::vector<double> planes[3];
  for (int c = 0; c < ncomp; ++c) {
    check(qt_seen[comp[c].qid], Err::DecodeError, "jpeg: missing quant table");
    dequantize_plane(coeffs[std::size_t(c)], width, height, qt[comp[c].qid],
                     planes[c]);
  }
  if (ncomp == 1) {
    Image8 img;
    img.width = width;
    img.height = height;
    img.pixels.resize(std::size_t(3 * width * height));
    for (std::size_t i = 0; i < std::size_t(width) * height; ++i) {
      const std::uint8_t v = clamp_u8(planes[0][i]);
      img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = v;
    }
    return img;
  }
  return ycbcr_to_rgb(planes[0], planes[1], planes[2], width, height);
}

Image8 jpeg_quantize(const Image8& img, int quality) {
  check(!img.empty(), Err::InvalidArgument, "jpeg_quantize: empty image");
  int qy[64], qc[64];
  scaled_quant_table(kLumaQuant, quality, qy);
  scaled_quant_table(kChromaQuant, quality, qc);

  std::vector<double> py, pcb, pcr;
  rgb_to_ycbcr(img, py, pcb, pcr);
  std::vector<int> cy, ccb, ccr;
  quantize_plane(py, img.width, img.height, qy, cy);
  quantize_plane(pcb, img.width, img.height, qc, ccb);
  quantize_plane(pcr, img.width, img.height, qc, ccr);

  std::vector<double> ry, rcb, rcr;
  dequantize_plane(cy, img.width, img.height, qy, ry);
  dequantize_plane(ccb, img.width, img.height, qc, rcb);
  dequantize_plane(ccr, img.width, img.height, qc, rcr);
  return ycbcr_to_rgb(ry, rcb, rcr, img.width, img.height);
}

}  // namespace rkiqt
