#pragma once

#include <string>
#include <vector>

#include "pica/types.hpp"

namespace pica {

// Row-major floating-point image, values nominally in [0, 1].
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(size_t(w) * h * c, 0.0) {}

  double& at(int x, int y, int c) { return data[(size_t(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(size_t(y) * width + x) * channels + c]; }
};

// Binary PPM (P6), 3 channels, 8-bit.
void save_ppm(const std::string& path, const Image& img);
Image load_ppm(const std::string& path);

// Binary PGM (P5), 1 channel, 8-bit.
void save_pgm(const std::string& path, const Image& img);
Image load_pgm(const std::string& path);

// 8-bit PNG (1 or 3 channels), zlib-compressed.
void save_png(const std::string& path, const Image& img);

double psnr(const Image& a, const Image& b);

// Binary {0,1} threshold at 128/255, for mask and segmentation inputs.
Image binarize(const Image& img);

}  // namespace pica
