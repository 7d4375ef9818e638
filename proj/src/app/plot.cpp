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

#include <algorithm>
#include <cmath>

#include "dociq/app.hpp"
#include "dociq/error.hpp"

namespace dociq::app {

std::vector<int> histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1 || !(lo < hi)) throw Error(ErrorKind::kInvalidArgument, "histogram needs bins >= 1 and lo < hi");
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!std::isfinite(v) || v < lo || v > hi) {
      throw Error(ErrorKind::kInvalidArgument, "value " + std::to_string(v) + " outside the histogram range");
    }
    const int idx = std::min(bins - 1, static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)));
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

RgbImage render_histogram(std::span<const int> counts, ImageSize size) {
  RgbImage img(size.height, size.width);
  std::fill(img.bytes().begin(), img.bytes().end(), std::uint8_t{255});
  if (counts.empty()) return img;
  const int margin = 16;
  const int plot_w = size.width - 2 * margin;
  const int plot_h = size.height - 2 * margin;
  const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
  const double bar_w = static_cast<double>(plot_w) / static_cast<double>(counts.size());
  auto set = [&img](int y, int x, std::array<std::uint8_t, 3> c) {
    if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return;
    for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[static_cast<std::size_t>(k)];
  };
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const int h = static_cast<int>(std::lround(static_cast<double>(counts[b]) / peak * plot_h));
    const int x0 = margin + static_cast<int>(std::lround(b * bar_w)) + 1;
    const int x1 = margin + static_cast<int>(std::lround((b + 1) * bar_w)) - 1;
    for (int y = size.height - margin - h; y < size.height - margin; ++y)
      for (int x = x0; x < x1; ++x) set(y, x, {60, 110, 190});
  }
  for (int x = margin; x < size.width - margin; ++x) set(size.height - margin, x, {0, 0, 0});
  for (int y = margin; y <= size.height - margin; ++y) set(y, margin, {0, 0, 0});
  return img;
}

}  // namespace dociq::app
