// Copyright 2026 The DocIQ Authors
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

#include "dociq/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dociq/error.hpp"

namespace dociq {
namespace {

void write_impl(const std::filesystem::path& path, int height, int width, png_uint_32 format,
                const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorKind::kIo, "cannot write png " + path.string() + ": " + image.message);
  }
}

std::vector<std::uint8_t> read_impl(const std::filesystem::path& path, png_uint_32 format, int& height,
                                    int& width) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorKind::kIo, "cannot read png " + path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::kIo, "cannot decode png " + path.string() + ": " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_impl(path, image.height(), image.width(), PNG_FORMAT_RGB, image.bytes().data());
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write_impl(path, image.height(), image.width(), PNG_FORMAT_GRAY, image.bytes().data());
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  auto buffer = read_impl(path, PNG_FORMAT_RGB, h, w);
  RgbImage out(h, w);
  out.bytes() = std::move(buffer);
  return out;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  auto buffer = read_impl(path, PNG_FORMAT_GRAY, h, w);
  GrayImage out(h, w);
  out.bytes() = std::move(buffer);
  return out;
}

RgbImage resize_bilinear(const RgbImage& image, ImageSize size) {
  if (image.size() == size) return image;
  RgbImage out(size.height, size.width);
  const double sy = static_cast<double>(image.height()) / size.height;
  const double sx = static_cast<double>(image.width()) / size.width;
  for (int y = 0; y < size.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < size.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(y0, x0, c) * (1 - tx) + image.at(y0, x1, c) * tx;
        const double bottom = image.at(y1, x0, c) * (1 - tx) + image.at(y1, x1, c) * tx;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(top * (1 - ty) + bottom * ty));
      }
    }
  }
  return out;
}

GrayImage resize_nearest(const GrayImage& image, ImageSize size) {
  if (image.size() == size) return image;
  GrayImage out(size.height, size.width);
  for (int y = 0; y < size.height; ++y) {
    const int sy = std::min(image.height() - 1, y * image.height() / size.height);
    for (int x = 0; x < size.width; ++x) {
      const int sx = std::min(image.width() - 1, x * image.width() / size.width);
      out.at(y, x) = image.at(sy, sx);
    }
  }
  return out;
}

std::vector<double> luminance(const RgbImage& image) {
  std::vector<double> out(image.pixel_count());
  const auto& b = image.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.299 * b[3 * i] + 0.587 * b[3 * i + 1] + 0.114 * b[3 * i + 2];
  }
  return out;
}

}  // namespace dociq
