#include "pica/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pica {

namespace {

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void skip_pnm_header_ws(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

Image load_pnm(const std::string& path, const std::string& magic, int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image: " + path);
  std::string m;
  in >> m;
  if (m != magic) throw FormatError(path + ": expected " + magic + " image");
  int w, h, maxval;
  skip_pnm_header_ws(in);
  in >> w;
  skip_pnm_header_ws(in);
  in >> h;
  skip_pnm_header_ws(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw FormatError(path + ": bad PNM header");
  in.get();  // single whitespace after the header
  std::vector<uint8_t> bytes(size_t(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError(path + ": truncated pixel data");
  Image img(w, h, channels);
  for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

void save_pnm(const std::string& path, const Image& img, const std::string& magic, int channels) {
  if (img.channels != channels)
    throw FormatError(path + ": image has " + std::to_string(img.channels) +
                      " channels, expected " + std::to_string(channels));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write image: " + path);
  out << magic << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::vector<uint8_t> bytes(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) bytes[i] = to_byte(img.data[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

uint32_t png_crc(const uint8_t* data, size_t len) {
  return static_cast<uint32_t>(crc32(crc32(0L, nullptr, 0), data, static_cast<uInt>(len)));
}

void write_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

void write_png_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> head;
  write_be32(head, static_cast<uint32_t>(payload.size()));
  out.write(reinterpret_cast<const char*>(head.data()), 4);
  std::vector<uint8_t> body(type, type + 4);
  body.insert(body.end(), payload.begin(), payload.end());
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  std::vector<uint8_t> crc;
  write_be32(crc, png_crc(body.data(), body.size()));
  out.write(reinterpret_cast<const char*>(crc.data()), 4);
}

}  // namespace

void save_ppm(const std::string& path, const Image& img) { save_pnm(path, img, "P6", 3); }
Image load_ppm(const std::string& path) { return load_pnm(path, "P6", 3); }
void save_pgm(const std::string& path, const Image& img) { save_pnm(path, img, "P5", 1); }
Image load_pgm(const std::string& path) { return load_pnm(path, "P5", 1); }

void save_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw FormatError(path + ": PNG writer supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write image: " + path);
  static const uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(signature), 8);

  std::vector<uint8_t> ihdr;
  write_be32(ihdr, static_cast<uint32_t>(img.width));
  write_be32(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);          // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_png_chunk(out, "IHDR", ihdr);

  // Raw scanlines with filter byte 0.
  std::vector<uint8_t> raw;
  raw.reserve(size_t(img.height) * (1 + size_t(img.width) * img.channels));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) raw.push_back(to_byte(img.at(x, y, c)));
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(comp_len);
  if (compress2(compressed.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericalError(path + ": zlib compression failed");
  compressed.resize(comp_len);
  write_png_chunk(out, "IDAT", compressed);
  write_png_chunk(out, "IEND", {});
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw FormatError("psnr: image dimensions differ");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

Image binarize(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = v >= 128.0 / 255.0 ? 1.0 : 0.0;
  return out;
}

}  // namespace pica
