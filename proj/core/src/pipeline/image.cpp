// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/image.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace avi::pipeline {

GrayImage RenderTriptych(const RowMatrix& input, const RowMatrix& restored, const RowMatrix& truth,
                         const corruption::Mask& mask) {
  const RowMatrix* panels[] = {&input, &restored, &truth};
  for (const auto* p : panels)
    if (p->rows() != input.rows() || p->cols() != input.cols())
      throw std::invalid_argument("triptych panels differ in shape");
  if (mask.Frames() != input.rows()) throw std::invalid_argument("mask length differs from panels");
  const int frames = static_cast<int>(input.rows());
  const int bins = static_cast<int>(input.cols());
  GrayImage img;
  img.width = 3 * frames + 2 * kTriptychGap;
  img.height = kTriptychStrip + 1 + bins;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 255);
  for (int p = 0; p < 3; ++p) {
    const int x0 = p * (frames + kTriptychGap);
    for (int t = 0; t < frames; ++t) {
      const std::uint8_t strip = mask.IsIntact(t) ? 255 : 0;
      for (int y = 0; y < kTriptychStrip; ++y) img.pixels[static_cast<std::size_t>(y) * img.width + x0 + t] = strip;
      for (int b = 0; b < bins; ++b) {
        const double v = std::clamp((*panels[p])(t, b), 0.0, 1.0);
        const int y = kTriptychStrip + 1 + (bins - 1 - b);
        img.pixels[static_cast<std::size_t>(y) * img.width + x0 + t] = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  }
  return img;
}

void WritePng(const std::filesystem::path& path, const GrayImage& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage ReadPng(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw std::runtime_error("cannot read PNG " + path.string());
  img.format = PNG_FORMAT_GRAY;
  GrayImage out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path.string());
  }
  return out;
}

}  // namespace avi::pipeline
