// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rdf {
namespace {

/// RAII shells around the C file handle and libpng's longjmp error model:
/// every libpng call below runs under a setjmp that converts fatal errors
/// into C++ exceptions after cleanup.
struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::filesystem::path& path, const char* mode) {
    fp = std::fopen(path.string().c_str(), mode);
    if (!fp) throw std::runtime_error("cannot open " + path.string());
  }
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

unsigned char quantize8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

void write_png_impl(const std::filesystem::path& path, int width, int height,
                    int bit_depth, int color_type,
                    const std::vector<unsigned char>& bytes,
                    std::size_t row_bytes) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("png write: non-positive image size");
  }
  if (bytes.size() != row_bytes * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("png write: buffer size mismatch");
  }
  FileHandle file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + row_bytes * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_sidecar(const std::filesystem::path& image_path, double lo,
                   double hi, const char* note) {
  nlohmann::json j{{"lo", lo}, {"hi", hi}, {"note", note}};
  const std::filesystem::path side = image_path.string() + ".json";
  std::ofstream out(side);
  if (!out) throw std::runtime_error("cannot create " + side.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<double>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("write_png_rgb8: buffer size mismatch");
  }
  std::vector<unsigned char> bytes(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) bytes[i] = quantize8(rgb[i]);
  write_png_impl(path, width, height, 8, PNG_COLOR_TYPE_RGB, bytes,
                 static_cast<std::size_t>(width) * 3);
}

std::vector<double> read_png_rgb8(const std::filesystem::path& path,
                                  int* width, int* height) {
  FileHandle file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path.string());
  }
  png_init_io(png, file.fp);
  // Normalize every supported layout to 8-bit RGB rows.
  png_read_png(png, info,
               PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA |
                   PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND |
                   PNG_TRANSFORM_GRAY_TO_RGB,
               nullptr);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  png_bytepp rows = png_get_rows(png, info);
  if (png_get_channels(png, info) != 3 ||
      png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path.string() + ": unsupported pixel layout");
  }
  std::vector<double> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w * 3; ++i) {
      rgb[static_cast<std::size_t>(y) * w * 3 + i] = rows[y][i] / 255.0;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  *width = w;
  *height = h;
  return rgb;
}

void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<double>& values, double lo, double hi) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("write_png_gray16: buffer size mismatch");
  }
  if (!(hi > lo)) throw std::invalid_argument("write_png_gray16: hi <= lo");
  // PNG stores 16-bit samples big-endian.
  std::vector<unsigned char> bytes(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = std::clamp((values[i] - lo) / (hi - lo), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    bytes[2 * i] = static_cast<unsigned char>(q >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  write_png_impl(path, width, height, 16, PNG_COLOR_TYPE_GRAY, bytes,
                 static_cast<std::size_t>(width) * 2);
  write_sidecar(path, lo, hi, "value = lo + (sample / 65535) * (hi - lo)");
}

void save_image_png(const std::filesystem::path& path, const RenderedImage& im) {
  write_png_rgb8(path, im.width, im.height, im.rgb);
}

RenderedImage load_image_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<double> rgb = read_png_rgb8(path, &w, &h);
  RenderedImage im(w, h);
  im.rgb = std::move(rgb);
  return im;
}

void save_depth_pgm(const std::filesystem::path& path, const RenderedImage& im) {
  double hi = 0.0;
  for (double d : im.depth) hi = std::max(hi, d);
  if (hi <= 0.0) hi = 1.0;  // all-miss image: degenerate but still writable
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create " + path.string());
  out << "P5\n" << im.width << " " << im.height << "\n65535\n";
  for (double d : im.depth) {
    const double t = d < 0.0 ? 0.0 : std::clamp(d / hi, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
  write_sidecar(path, 0.0, hi,
                "depth = (sample / 65535) * hi; 0 also marks no-hit pixels");
}

void save_heatmap_png(const std::filesystem::path& path,
                      const Eigen::MatrixXd& values, double lo, double hi) {
  if (values.size() == 0) {
    throw std::invalid_argument("save_heatmap_png: empty matrix");
  }
  if (lo == hi) {
    lo = values.minCoeff();
    hi = values.maxCoeff();
    if (hi <= lo) hi = lo + 1.0;  // constant matrix: map everything to 0
  }
  const int h = static_cast<int>(values.rows());
  const int w = static_cast<int>(values.cols());
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = std::clamp((values(y, x) - lo) / (hi - lo), 0.0, 1.0);
      bytes[static_cast<std::size_t>(y) * w + x] =
          static_cast<unsigned char>(std::lround(t * 255.0));
    }
  }
  write_png_impl(path, w, h, 8, PNG_COLOR_TYPE_GRAY, bytes,
                 static_cast<std::size_t>(w));
  write_sidecar(path, lo, hi, "value = lo + (sample / 255) * (hi - lo)");
}

}  // namespace rdf
