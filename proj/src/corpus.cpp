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

#include "dociq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "dociq/error.hpp"
#include "dociq/ingest.hpp"
#include "dociq/random.hpp"

namespace dociq::corpus {
namespace {

// Interleaved HWC doubles in [0, 255] used between 8-bit stage boundaries.
struct FloatImage {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  FloatImage() = default;
  FloatImage(int height, int width) : h(height), w(width), v(static_cast<std::size_t>(height) * width * 3, 0.0) {}
  double& at(int y, int x, int c) { return v[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
  double at(int y, int x, int c) const { return v[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
};

FloatImage to_float(const RgbImage& img) {
  FloatImage f(img.height(), img.width());
  const auto& b = img.bytes();
  for (std::size_t i = 0; i < b.size(); ++i) f.v[i] = b[i];
  return f;
}

RgbImage to_rgb(const FloatImage& f) {
  RgbImage img(f.h, f.w);
  auto& b = img.bytes();
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = static_cast<std::uint8_t>(std::clamp(std::lround(f.v[i]), 0L, 255L));
  }
  return img;
}

double sample_bilinear(const FloatImage& f, double y, double x, int c) {
  y = std::clamp(y, 0.0, f.h - 1.0);
  x = std::clamp(x, 0.0, f.w - 1.0);
  const int y0 = static_cast<int>(y);
  const int x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, f.h - 1);
  const int x1 = std::min(x0 + 1, f.w - 1);
  const double ty = y - y0;
  const double tx = x - x0;
  const double top = f.at(y0, x0, c) * (1 - tx) + f.at(y0, x1, c) * tx;
  const double bottom = f.at(y1, x0, c) * (1 - tx) + f.at(y1, x1, c) * tx;
  return top * (1 - ty) + bottom * ty;
}

// Separable 1-D filter along rows (axis 1) or columns (axis 0), clamped borders.
FloatImage convolve_axis(const FloatImage& f, const std::vector<double>& kernel, int axis) {
  const int r = static_cast<int>(kernel.size()) / 2;
  FloatImage out(f.h, f.w);
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          const int yy = axis == 0 ? std::clamp(y + k, 0, f.h - 1) : y;
          const int xx = axis == 1 ? std::clamp(x + k, 0, f.w - 1) : x;
          acc += kernel[static_cast<std::size_t>(k + r)] * f.at(yy, xx, c);
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

FloatImage gaussian_blur(const FloatImage& f, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  for (int i = -r; i <= r; ++i) k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& x : k) x /= sum;
  return convolve_axis(convolve_axis(f, k, 1), k, 0);
}

// Running-sum box filter, clamped borders.
FloatImage box_blur(const FloatImage& f, int r) {
  auto pass = [r](const FloatImage& src, int axis) {
    FloatImage out(src.h, src.w);
    const int len = axis == 1 ? src.w : src.h;
    const int lines = axis == 1 ? src.h : src.w;
    std::vector<double> buf(static_cast<std::size_t>(len));
    for (int line = 0; line < lines; ++line) {
      for (int c = 0; c < 3; ++c) {
        auto get = [&](int i) {
          i = std::clamp(i, 0, len - 1);
          return axis == 1 ? src.at(line, i, c) : src.at(i, line, c);
        };
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) acc += get(k);
        for (int i = 0; i < len; ++i) {
          buf[static_cast<std::size_t>(i)] = acc / (2 * r + 1);
          acc += get(i + r + 1) - get(i - r);
        }
        for (int i = 0; i < len; ++i) {
          (axis == 1 ? out.at(line, i, c) : out.at(i, line, c)) = buf[static_cast<std::size_t>(i)];
        }
      }
    }
    return out;
  };
  return pass(pass(f, 1), 0);
}

FloatImage max_filter(const FloatImage& f, int r) {
  auto pass = [r](const FloatImage& src, int axis) {
    FloatImage out(src.h, src.w);
    for (int y = 0; y < src.h; ++y) {
      for (int x = 0; x < src.w; ++x) {
        for (int c = 0; c < 3; ++c) {
          double m = 0.0;
          for (int k = -r; k <= r; ++k) {
            const int yy = axis == 0 ? std::clamp(y + k, 0, src.h - 1) : y;
            const int xx = axis == 1 ? std::clamp(x + k, 0, src.w - 1) : x;
            m = std::max(m, src.at(yy, xx, c));
          }
          out.at(y, x, c) = m;
        }
      }
    }
    return out;
  };
  return pass(pass(f, 1), 0);
}

FloatImage median3(const FloatImage& f) {
  FloatImage out(f.h, f.w);
  std::array<double, 9> win{};
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            win[static_cast<std::size_t>(n++)] =
                f.at(std::clamp(y + dy, 0, f.h - 1), std::clamp(x + dx, 0, f.w - 1), c);
        std::nth_element(win.begin(), win.begin() + 4, win.end());
        out.at(y, x, c) = win[4];
      }
    }
  }
  return out;
}

template <typename Map>
FloatImage remap(const FloatImage& f, Map map) {
  FloatImage out(f.h, f.w);
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const auto [sy, sx] = map(static_cast<double>(y), static_cast<double>(x));
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_bilinear(f, sy, sx, c);
    }
  }
  return out;
}

double luma(const FloatImage& f, int y, int x) {
  return 0.299 * f.at(y, x, 0) + 0.587 * f.at(y, x, 1) + 0.114 * f.at(y, x, 2);
}

// ---------------------------------------------------------------------------
// Document rendering

struct Canvas {
  RgbImage& image;
  LayoutMask& mask;

  void fill(int y0, int x0, int h, int w, std::array<int, 3> color) {
    const int y1 = std::min(image.height(), y0 + h);
    const int x1 = std::min(image.width(), x0 + w);
    for (int y = std::max(0, y0); y < y1; ++y)
      for (int x = std::max(0, x0); x < x1; ++x)
        for (int c = 0; c < 3; ++c) image.at(y, x, c) = static_cast<std::uint8_t>(color[static_cast<std::size_t>(c)]);
  }

  void label(int y0, int x0, int h, int w, LayoutClass cls) {
    const int y1 = std::min(mask.height(), y0 + h);
    const int x1 = std::min(mask.width(), x0 + w);
    for (int y = std::max(0, y0); y < y1; ++y)
      for (int x = std::max(0, x0); x < x1; ++x) mask.at(y, x) = static_cast<std::uint8_t>(cls);
  }
};

void draw_words(Canvas& canvas, Rng& rng, int y, int x0, int x1, int height, int pitch, std::array<int, 3> ink) {
  int x = x0;
  while (x < x1) {
    int len = 2 + rng.uniform_int(std::max(2, (x1 - x0) / 6));
    len = std::min(len, x1 - x);
    canvas.fill(y, x, height, len, ink);
    x += len + 1 + rng.uniform_int(std::max(1, pitch / 2));
  }
}

void draw_text_block(Canvas& canvas, Rng& rng, int y0, int x0, int h, int w, int pitch) {
  const int shade = 10 + rng.uniform_int(60);
  const std::array<int, 3> ink = {shade, shade, shade + rng.uniform_int(20)};
  const int line_h = std::max(1, static_cast<int>(pitch * 0.45));
  const int lines = std::max(1, h / pitch);
  for (int l = 0; l < lines; ++l) {
    const int y = y0 + l * pitch + (pitch - line_h) / 2;
    const int end = l + 1 == lines ? x0 + static_cast<int>(w * rng.uniform(0.4, 1.0)) : x0 + w;
    draw_words(canvas, rng, y, x0, end, line_h, pitch, ink);
  }
  canvas.label(y0, x0, h, w, LayoutClass::kText);
}

void draw_table_block(Canvas& canvas, Rng& rng, int y0, int x0, int h, int w, int pitch) {
  const int rows = std::max(1, h / std::max(3, pitch * 3 / 2));
  const int cols = 2 + rng.uniform_int(4);
  const int shade = 20 + rng.uniform_int(50);
  const std::array<int, 3> rule = {shade, shade, shade};
  const double row_h = static_cast<double>(h) / rows;
  const double col_w = static_cast<double>(w) / cols;
  for (int r = 0; r <= rows; ++r) canvas.fill(y0 + std::min(h - 1, static_cast<int>(r * row_h)), x0, 1, w, rule);
  for (int c = 0; c <= cols; ++c) canvas.fill(y0, x0 + std::min(w - 1, static_cast<int>(c * col_w)), h, 1, rule);
  const int text_h = std::max(1, static_cast<int>(row_h * 0.35));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cx = x0 + static_cast<int>(c * col_w) + 2;
      const int cw = static_cast<int>(col_w * rng.uniform(0.2, 0.8));
      const int cy = y0 + static_cast<int>(r * row_h + (row_h - text_h) / 2);
      if (cw > 0) canvas.fill(cy, cx, text_h, cw, rule);
    }
  }
  canvas.label(y0, x0, h, w, LayoutClass::kTable);
}

void draw_figure_block(Canvas& canvas, Rng& rng, int y0, int x0, int h, int w) {
  std::array<int, 3> base{};
  for (int& c : base) c = 40 + rng.uniform_int(180);
  for (int y = 0; y < h; ++y) {
    const double t = static_cast<double>(y) / std::max(1, h - 1);
    std::array<int, 3> col{};
    for (std::size_t c = 0; c < 3; ++c) col[c] = std::clamp(static_cast<int>(base[c] * (0.7 + 0.5 * t)), 0, 255);
    canvas.fill(y0 + y, x0, 1, w, col);
  }
  // An inner ellipse in a contrasting colour.
  std::array<int, 3> accent{};
  for (int& c : accent) c = rng.uniform_int(256);
  const double cy = y0 + h * rng.uniform(0.3, 0.7);
  const double cx = x0 + w * rng.uniform(0.3, 0.7);
  const double ry = h * rng.uniform(0.15, 0.35);
  const double rx = w * rng.uniform(0.15, 0.35);
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      const double dy = (y - cy) / std::max(ry, 1.0);
      const double dx = (x - cx) / std::max(rx, 1.0);
      if (dy * dy + dx * dx <= 1.0) canvas.fill(y, x, 1, 1, accent);
    }
  }
  canvas.label(y0, x0, h, w, LayoutClass::kFigure);
}

}  // namespace

SyntheticDocument render_document(std::uint64_t seed, ImageSize size) {
  if (size.height < kMinDocumentSide || size.width < kMinDocumentSide) {
    throw Error(ErrorKind::kInvalidArgument, "document size " + std::to_string(size.height) + "x" +
                                                 std::to_string(size.width) + " is below the 64x64 minimum");
  }
  Rng rng(seed);
  SyntheticDocument doc;
  doc.seed = seed;
  const int paper = 240 + rng.uniform_int(16);
  doc.image = RgbImage(size.height, size.width);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      doc.image.at(y, x, 0) = static_cast<std::uint8_t>(paper);
      doc.image.at(y, x, 1) = static_cast<std::uint8_t>(paper);
      doc.image.at(y, x, 2) = static_cast<std::uint8_t>(std::max(0, paper - 4));
    }
  doc.mask = LayoutMask(size.height, size.width, static_cast<std::uint8_t>(LayoutClass::kBackground));
  Canvas canvas{doc.image, doc.mask};

  const int margin_x = std::max(4, size.width / 16);
  const int margin_y = std::max(4, size.height / 16);
  const int pitch = std::max(4, size.height / 32);
  const int bottom = size.height - margin_y;
  int y = margin_y;
  while (y + pitch < bottom) {
    const bool two_columns = rng.bernoulli(0.3);
    const int gutter = pitch;
    const int usable = size.width - 2 * margin_x;
    const int columns = two_columns ? 2 : 1;
    const int col_w = two_columns ? (usable - gutter) / 2 : usable;
    int advance = pitch;
    for (int c = 0; c < columns; ++c) {
      const int x0 = margin_x + c * (col_w + gutter);
      const double pick = rng.uniform();
      int h = 0;
      if (pick < 0.5) {
        h = (2 + rng.uniform_int(5)) * pitch;
      } else if (pick < 0.75) {
        h = (2 + rng.uniform_int(4)) * (pitch * 3 / 2);
      } else {
        h = size.height / 8 + rng.uniform_int(std::max(1, size.height / 5));
      }
      h = std::min(h, bottom - y);
      if (h < pitch) continue;
      if (pick < 0.5) {
        draw_text_block(canvas, rng, y, x0, h, col_w, pitch);
      } else if (pick < 0.75) {
        draw_table_block(canvas, rng, y, x0, h, col_w, pitch);
      } else {
        draw_figure_block(canvas, rng, y, x0, h, col_w);
      }
      advance = std::max(advance, h);
    }
    y += advance + pitch;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Distortions

std::string_view to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kShadow: return "shadow";
    case DistortionKind::kOcclusion: return "occlusion";
    case DistortionKind::kBlur: return "blur";
    case DistortionKind::kCreases: return "creases";
    case DistortionKind::kMoire: return "moire";
  }
  return "unknown";
}

DistortionKind distortion_from_string(std::string_view name) {
  for (auto k : kAllDistortions)
    if (to_string(k) == name) return k;
  throw Error(ErrorKind::kUnsupportedDistortion, "unknown distortion '" + std::string(name) + "'");
}

namespace {

FloatImage distort_shadow(const FloatImage& f, double s, Rng& rng) {
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double edge = rng.uniform(0.3, 0.7);
  const double softness = rng.uniform(0.1, 0.3);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double extent = std::abs(dx) * f.w + std::abs(dy) * f.h;
  const double offset = std::min(0.0, dx * f.w) + std::min(0.0, dy * f.h);
  FloatImage out = f;
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const double t = ((x * dx + y * dy) - offset) / extent;
      const double u = std::clamp((t - edge + softness) / (2 * softness), 0.0, 1.0);
      const double smooth = u * u * (3 - 2 * u);
      const double factor = 1.0 - 0.75 * s * smooth;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y, x, c) * factor;
    }
  }
  return out;
}

FloatImage distort_occlusion(const FloatImage& f, double s, Rng& rng) {
  const int n = 5 + rng.uniform_int(4);
  std::vector<double> radii(static_cast<std::size_t>(n));
  std::vector<double> angles(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    radii[static_cast<std::size_t>(i)] = rng.uniform(0.7, 1.3);
    angles[static_cast<std::size_t>(i)] = 2.0 * M_PI * (i + rng.uniform(-0.3, 0.3)) / n;
  }
  double unit_area = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>((i + 1) % n);
    unit_area += 0.5 * radii[a] * radii[b] * std::sin(angles[b] - angles[a] + (b == 0 ? 2 * M_PI : 0.0));
  }
  const double target = 0.5 * s * f.h * f.w;
  const double scale = std::sqrt(target / std::max(unit_area, 1e-6));
  const double cy = rng.uniform(0.25, 0.75) * f.h;
  const double cx = rng.uniform(0.25, 0.75) * f.w;
  std::vector<std::pair<double, double>> poly;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    poly.emplace_back(cy + scale * radii[k] * std::sin(angles[k]), cx + scale * radii[k] * std::cos(angles[k]));
  }
  const std::array<double, 3> colour = {rng.uniform(150, 220), rng.uniform(100, 170), rng.uniform(80, 140)};
  FloatImage out = f;
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      bool inside = false;
      const double py = y + 0.5;
      const double px = x + 0.5;
      for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto [yi, xi] = poly[i];
        const auto [yj, xj] = poly[j];
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
      }
      if (inside)
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = colour[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

FloatImage distort_blur(const FloatImage& f, double s, Rng& rng) {
  if (rng.bernoulli(0.5)) return gaussian_blur(f, 0.3 + 3.5 * s);
  const int taps = 2 + static_cast<int>(std::lround(12.0 * s));
  const double angle = rng.uniform(0.0, M_PI);
  const double dy = std::sin(angle);
  const double dx = std::cos(angle);
  FloatImage out(f.h, f.w);
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int t = 0; t < taps; ++t) {
          const double off = t - (taps - 1) / 2.0;
          acc += sample_bilinear(f, y + off * dy, x + off * dx, c);
        }
        out.at(y, x, c) = acc / taps;
      }
    }
  }
  return out;
}

FloatImage distort_creases(const FloatImage& f, double s, Rng& rng) {
  FloatImage cur = f;
  const int lines = 1 + static_cast<int>(std::lround(3.0 * s));
  for (int l = 0; l < lines; ++l) {
    const double py = rng.uniform(0.2, 0.8) * f.h;
    const double px = rng.uniform(0.2, 0.8) * f.w;
    const double angle = rng.uniform(0.0, M_PI);
    const double ny = std::cos(angle);  // unit normal
    const double nx = -std::sin(angle);
    const double band = 2.0 + 6.0 * s;
    const double shear = 2.0 * s;
    const FloatImage src = cur;
    for (int y = 0; y < f.h; ++y) {
      for (int x = 0; x < f.w; ++x) {
        const double d = (y - py) * ny + (x - px) * nx;
        if (std::abs(d) >= band) continue;
        const double fall = 1.0 - std::abs(d) / band;
        const double factor = d > 0 ? 1.0 - 0.35 * s * fall : 1.0 + 0.25 * s * fall;
        const double shift = shear * fall;
        for (int c = 0; c < 3; ++c) {
          cur.at(y, x, c) = factor * sample_bilinear(src, y - ny * shift, x - nx * shift, c);
        }
      }
    }
  }
  return cur;
}

FloatImage distort_moire(const FloatImage& f, double s, Rng& rng) {
  const double f1 = rng.uniform(0.15, 0.35);
  const double a1 = rng.uniform(0.0, M_PI);
  const double f2 = f1 * rng.uniform(0.9, 1.1);
  const double a2 = a1 + rng.uniform(0.05, 0.2);
  std::array<double, 3> phase{};
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * M_PI);
  const double amplitude = 70.0 * s;
  FloatImage out = f;
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const double u = 2 * M_PI * f1 * (x * std::cos(a1) + y * std::sin(a1));
      const double v = 2 * M_PI * f2 * (x * std::cos(a2) + y * std::sin(a2));
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = f.at(y, x, c) + amplitude * std::sin(u + phase[static_cast<std::size_t>(c)]) * std::cos(v);
      }
    }
  }
  return out;
}

}  // namespace

RgbImage apply_distortion(const RgbImage& image, const DistortionSpec& spec) {
  if (image.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot distort an empty image");
  if (!(spec.severity >= 0.0 && spec.severity <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "severity must lie in [0, 1]");
  }
  if (spec.severity == 0.0) {
    switch (spec.kind) {
      case DistortionKind::kShadow:
      case DistortionKind::kOcclusion:
      case DistortionKind::kBlur:
      case DistortionKind::kCreases:
      case DistortionKind::kMoire:
        return image;
    }
    throw Error(ErrorKind::kUnsupportedDistortion, "unknown distortion kind");
  }
  Rng rng(spec.seed);
  const FloatImage f = to_float(image);
  switch (spec.kind) {
    case DistortionKind::kShadow: return to_rgb(distort_shadow(f, spec.severity, rng));
    case DistortionKind::kOcclusion: return to_rgb(distort_occlusion(f, spec.severity, rng));
    case DistortionKind::kBlur: return to_rgb(distort_blur(f, spec.severity, rng));
    case DistortionKind::kCreases: return to_rgb(distort_creases(f, spec.severity, rng));
    case DistortionKind::kMoire: return to_rgb(distort_moire(f, spec.severity, rng));
  }
  throw Error(ErrorKind::kUnsupportedDistortion, "unknown distortion kind");
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "boundary_removal", "dewarp", "demoire", "occlusion_removal", "deblur", "deshadow", "enhancement"};

FloatImage stage_boundary(const FloatImage& f) {
  std::vector<double> l;
  l.reserve(static_cast<std::size_t>(f.h) * f.w);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) l.push_back(luma(f, y, x));
  const auto k = static_cast<std::ptrdiff_t>(0.98 * (l.size() - 1));
  std::nth_element(l.begin(), l.begin() + k, l.end());
  const double white = std::max(l[static_cast<std::size_t>(k)], 1.0);
  const double gain = std::clamp(250.0 / white, 0.8, 1.6);
  FloatImage out = f;
  for (double& v : out.v) v *= gain;
  return out;
}

FloatImage stage_dewarp(const FloatImage& f, int option) {
  const double cy = (f.h - 1) / 2.0;
  const double cx = (f.w - 1) / 2.0;
  switch (option) {
    case 0:
      return remap(f, [&](double y, double x) { return std::pair{y, x + 0.03 * (y - cy)}; });
    case 1:
      return remap(f, [&](double y, double x) { return std::pair{y + 1.5 * std::sin(2 * M_PI * x / f.w), x}; });
    default: {
      const double a = 0.6 * M_PI / 180.0;
      return remap(f, [&](double y, double x) {
        const double ry = y - cy;
        const double rx = x - cx;
        return std::pair{cy + ry * std::cos(a) + rx * std::sin(a), cx - ry * std::sin(a) + rx * std::cos(a)};
      });
    }
  }
}

double chroma(const FloatImage& f, int y, int x) {
  const double mx = std::max({f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2)});
  const double mn = std::min({f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2)});
  return mx - mn;
}

FloatImage stage_occlusion(const FloatImage& f, int option) {
  FloatImage out = f;
  if (option == 0) {
    const FloatImage filled = max_filter(f, 2);
    for (int y = 0; y < f.h; ++y)
      for (int x = 0; x < f.w; ++x)
        if (chroma(f, y, x) > 40.0)
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = filled.at(y, x, c);
    return out;
  }
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const double l = luma(f, y, x);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = l + 0.3 * (f.at(y, x, c) - l);
    }
  }
  return out;
}

FloatImage stage_deblur(const FloatImage& f, int option) {
  constexpr std::array<std::pair<double, double>, 3> kParams = {{{1.0, 0.6}, {1.5, 1.0}, {2.5, 1.6}}};
  const auto [sigma, amount] = kParams[static_cast<std::size_t>(option)];
  const FloatImage low = gaussian_blur(f, sigma);
  FloatImage out = f;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = f.v[i] + amount * (f.v[i] - low.v[i]);
  return out;
}

FloatImage stage_deshadow(const FloatImage& f, int option) {
  FloatImage out = f;
  if (option < 3) {
    constexpr std::array<int, 3> kRadius = {4, 8, 16};
    const FloatImage bg = box_blur(max_filter(f, 2), kRadius[static_cast<std::size_t>(option)]);
    for (int y = 0; y < f.h; ++y) {
      for (int x = 0; x < f.w; ++x) {
        const double b = std::max(luma(bg, y, x), 1.0);
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y, x, c) * 245.0 / b;
      }
    }
    return out;
  }
  const FloatImage bg = box_blur(max_filter(f, 6), 6);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = f.v[i] * 250.0 / std::max(bg.v[i], 1.0);
  return out;
}

FloatImage stage_enhancement(const FloatImage& f, int option) {
  constexpr std::array<double, 3> kGamma = {0.7, 1.0, 1.4};
  constexpr std::array<double, 3> kContrast = {0.85, 1.15, 1.4};
  const double gamma = kGamma[static_cast<std::size_t>(option / 3)];
  const double contrast = kContrast[static_cast<std::size_t>(option % 3)];
  FloatImage out = f;
  for (double& v : out.v) {
    const double t = std::pow(std::clamp(v / 255.0, 0.0, 1.0), gamma);
    v = 255.0 * ((t - 0.5) * contrast + 0.5);
  }
  return out;
}

PipelineTrace draw_trace(Rng& rng, int variant_index) {
  PipelineTrace t;
  t.variant_index = variant_index;
  t.stage_order = {Stage::kBoundary, Stage::kDewarp, Stage::kDemoire, Stage::kOcclusionRemoval};
  std::array<Stage, 3> tail = {Stage::kDeblur, Stage::kDeshadow, Stage::kEnhancement};
  rng.shuffle(tail.begin(), tail.end());
  t.stage_order.insert(t.stage_order.end(), tail.begin(), tail.end());
  t.choices[0] = 0;
  for (std::size_t s = 1; s < kStageCount; ++s) {
    const int pick = rng.uniform_int(kStageOptions[s] + 1);
    t.choices[s] = pick == 0 ? kSkip : pick - 1;
  }
  return t;
}

bool same_processing(const PipelineTrace& a, const PipelineTrace& b) {
  return a.stage_order == b.stage_order && a.choices == b.choices;
}

}  // namespace

std::string_view stage_name(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  throw Error(ErrorKind::kParse, "unknown pipeline stage '" + std::string(name) + "'");
}

bool PipelineTrace::valid() const {
  if (stage_order.size() != kStageCount) return false;
  const std::array<Stage, 4> head = {Stage::kBoundary, Stage::kDewarp, Stage::kDemoire, Stage::kOcclusionRemoval};
  if (!std::equal(head.begin(), head.end(), stage_order.begin())) return false;
  std::array<Stage, 3> tail = {stage_order[4], stage_order[5], stage_order[6]};
  std::sort(tail.begin(), tail.end());
  if (tail != std::array<Stage, 3>{Stage::kDeblur, Stage::kDeshadow, Stage::kEnhancement}) return false;
  if (choices[0] != 0) return false;
  for (std::size_t s = 1; s < kStageCount; ++s) {
    if (choices[s] != kSkip && (choices[s] < 0 || choices[s] >= kStageOptions[s])) return false;
  }
  return variant_index >= 0 && variant_index < kVariantsPerImage;
}

nlohmann::ordered_json to_json(const PipelineTrace& trace) {
  nlohmann::ordered_json j;
  j["stage_order"] = nlohmann::ordered_json::array();
  for (Stage s : trace.stage_order) j["stage_order"].push_back(std::string(stage_name(s)));
  nlohmann::ordered_json choices = nlohmann::ordered_json::object();
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const auto name = std::string(kStageNames[s]);
    if (trace.choices[s] == kSkip) {
      choices[name] = "SKIP";
    } else {
      choices[name] = trace.choices[s];
    }
  }
  j["choices"] = std::move(choices);
  j["variant_index"] = trace.variant_index;
  return j;
}

PipelineTrace trace_from_json(const nlohmann::json& j) {
  PipelineTrace t;
  try {
    for (const auto& s : j.at("stage_order")) t.stage_order.push_back(stage_from_name(s.get<std::string>()));
    t.choices.fill(kSkip);
    for (const auto& [name, value] : j.at("choices").items()) {
      const auto idx = static_cast<std::size_t>(stage_from_name(name));
      t.choices[idx] = value.is_string() && value.get<std::string>() == "SKIP" ? kSkip : value.get<int>();
    }
    t.variant_index = j.at("variant_index").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed trace: ") + e.what());
  }
  if (!t.valid()) throw Error(ErrorKind::kParse, "trace violates pipeline structure");
  return t;
}

RgbImage apply_stage(const RgbImage& image, Stage stage, int option) {
  const auto idx = static_cast<std::size_t>(stage);
  if (option < 0 || option >= kStageOptions[idx]) {
    throw Error(ErrorKind::kInvalidArgument, "option " + std::to_string(option) + " out of range for stage " +
                                                 std::string(stage_name(stage)));
  }
  const FloatImage f = to_float(image);
  switch (stage) {
    case Stage::kBoundary: return to_rgb(stage_boundary(f));
    case Stage::kDewarp: return to_rgb(stage_dewarp(f, option));
    case Stage::kDemoire: return to_rgb(option == 0 ? box_blur(f, 1) : median3(f));
    case Stage::kOcclusionRemoval: return to_rgb(stage_occlusion(f, option));
    case Stage::kDeblur: return to_rgb(stage_deblur(f, option));
    case Stage::kDeshadow: return to_rgb(stage_deshadow(f, option));
    case Stage::kEnhancement: return to_rgb(stage_enhancement(f, option));
  }
  return image;
}

RgbImage apply_trace(const RgbImage& image, const PipelineTrace& trace) {
  RgbImage cur = image;
  for (Stage s : trace.stage_order) {
    const int option = trace.choice(s);
    if (option != kSkip) cur = apply_stage(cur, s, option);
  }
  return cur;
}

std::vector<PipelineTrace> sample_traces(std::uint64_t seed) {
  constexpr int kMaxAttempts = 100;
  Rng rng(seed);
  std::vector<PipelineTrace> traces;
  for (int v = 0; v < kVariantsPerImage; ++v) {
    PipelineTrace t = draw_trace(rng, v);
    int attempt = 0;
    auto collides = [&](const PipelineTrace& c) {
      return std::any_of(traces.begin(), traces.end(), [&](const auto& p) { return same_processing(p, c); });
    };
    while (collides(t) && attempt < kMaxAttempts) {
      t = draw_trace(rng, v);
      ++attempt;
    }
    if (collides(t)) {
      std::clog << "warning: pipeline seed " << seed << " variant " << v << " duplicates an earlier trace after "
                << kMaxAttempts << " redraws\n";
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

std::vector<EnhancedVariant> run_enhancement_pipeline(const RgbImage& image, std::uint64_t seed) {
  if (image.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot enhance an empty image");
  std::vector<EnhancedVariant> out;
  for (auto& trace : sample_traces(seed)) {
    RgbImage enhanced = apply_trace(image, trace);
    out.push_back({std::move(enhanced), std::move(trace)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ratings

void SimulatedRatingConfig::validate() const {
  if (rater_count < 3) throw Error(ErrorKind::kInvalidArgument, "rater_count must be >= 3");
  if (!(score_min < score_max)) throw Error(ErrorKind::kInvalidArgument, "score range must satisfy min < max");
  if (rater_noise_sd < 0 || rater_bias_sd < 0) throw Error(ErrorKind::kInvalidArgument, "rater sd must be >= 0");
  if (dimensions.empty()) throw Error(ErrorKind::kInvalidArgument, "at least one dimension is required");
  for (const auto& d : dimensions) {
    if (d != "overall" && d != "sharpness" && d != "color_fidelity") {
      throw Error(ErrorKind::kInvalidArgument, "no simulated statistic for dimension '" + d + "'");
    }
  }
}

nlohmann::ordered_json to_json(const SimulatedRatingConfig& c) {
  nlohmann::ordered_json j;
  j["rater_count"] = c.rater_count;
  j["dimensions"] = c.dimensions;
  j["score_range"] = {c.score_min, c.score_max};
  j["rater_noise_sd"] = c.rater_noise_sd;
  j["rater_bias_sd"] = c.rater_bias_sd;
  j["panel_seed"] = c.panel_seed;
  return j;
}

SimulatedRatingConfig rating_config_from_json(const nlohmann::json& j) {
  SimulatedRatingConfig c;
  c.rater_count = j.value("rater_count", c.rater_count);
  c.dimensions = j.value("dimensions", c.dimensions);
  if (j.contains("score_range")) {
    c.score_min = j.at("score_range").at(0).get<double>();
    c.score_max = j.at("score_range").at(1).get<double>();
  }
  c.rater_noise_sd = j.value("rater_noise_sd", c.rater_noise_sd);
  c.rater_bias_sd = j.value("rater_bias_sd", c.rater_bias_sd);
  c.panel_seed = j.value("panel_seed", c.panel_seed);
  return c;
}

double high_frequency_energy(const RgbImage& image) {
  const auto l = luminance(image);
  const int h = image.height();
  const int w = image.width();
  if (h < 3 || w < 3) return 0.0;
  double acc = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      acc += std::abs(4 * l[i] - l[i - 1] - l[i + 1] - l[i - static_cast<std::size_t>(w)] -
                      l[i + static_cast<std::size_t>(w)]);
    }
  }
  return acc / (static_cast<double>(h - 2) * (w - 2));
}

LatentQuality latent_quality(const RgbImage& variant, const RgbImage& reference) {
  if (variant.size() != reference.size()) {
    throw Error(ErrorKind::kInvalidArgument, "variant and reference differ in size");
  }
  LatentQuality q;
  const double hv = high_frequency_energy(variant);
  const double hr = high_frequency_energy(reference);
  const double ratio = hr > 0.0 ? hv / hr : (hv > 0.0 ? 1.0 + hv : 1.0);
  q.sharpness = ratio > 0.0 ? std::exp(-1.5 * std::abs(std::log(ratio))) : 0.0;
  const auto& a = variant.bytes();
  const auto& b = reference.bytes();
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
  diff /= 255.0 * static_cast<double>(a.size());
  q.color_fidelity = std::exp(-6.0 * diff);
  q.overall = 0.5 * q.sharpness + 0.5 * q.color_fidelity;
  return q;
}

std::vector<DimensionRatings> synthesize_ratings(const RgbImage& variant, const RgbImage& reference,
                                                 const SimulatedRatingConfig& config, std::uint64_t seed) {
  config.validate();
  const LatentQuality q = latent_quality(variant, reference);
  Rng bias_rng(derive_seed(config.panel_seed, "rater.bias"));
  std::vector<double> bias(static_cast<std::size_t>(config.rater_count));
  for (double& b : bias) b = bias_rng.normal(0.0, config.rater_bias_sd);
  Rng noise_rng(derive_seed(seed, "rater.noise"));
  std::vector<DimensionRatings> out;
  for (const auto& dim : config.dimensions) {
    const double quality = dim == "overall" ? q.overall : dim == "sharpness" ? q.sharpness : q.color_fidelity;
    const double latent = config.score_min + quality * (config.score_max - config.score_min);
    DimensionRatings r{dim, {}};
    for (int k = 0; k < config.rater_count; ++k) {
      const double noise = noise_rng.normal(0.0, config.rater_noise_sd);
      r.scores.push_back(std::clamp(latent + bias[static_cast<std::size_t>(k)] + noise, config.score_min,
                                    config.score_max));
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

std::size_t generate_corpus(const std::filesystem::path& out, const CorpusConfig& config) {
  if (config.originals < 1) throw Error(ErrorKind::kInvalidArgument, "originals must be >= 1");
  if (!(0.0 <= config.min_severity && config.min_severity <= config.max_severity && config.max_severity <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "severity range must satisfy 0 <= min <= max <= 1");
  }
  SimulatedRatingConfig ratings = config.ratings;
  ratings.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");

  std::vector<std::vector<ingest::DocumentSample>> per_original(static_cast<std::size_t>(config.originals));
  std::vector<std::string> failures(static_cast<std::size_t>(config.originals));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < config.originals; ++i) {
    try {
      char id[32];
      std::snprintf(id, sizeof(id), "doc%04d", i);
      const auto doc = render_document(derive_seed(config.seed, "document", static_cast<std::uint64_t>(i)),
                                       config.size);
      Rng severity_rng(derive_seed(config.seed, "severity", static_cast<std::uint64_t>(i)));
      DistortionSpec spec;
      spec.kind = kAllDistortions[static_cast<std::size_t>(i) % kAllDistortions.size()];
      spec.severity = severity_rng.uniform(config.min_severity, config.max_severity);
      spec.seed = derive_seed(config.seed, "distortion", static_cast<std::uint64_t>(i));
      const RgbImage captured = apply_distortion(doc.image, spec);
      const std::string mask_rel = std::string("masks/") + id + ".png";
      write_png(out / mask_rel, doc.mask);
      const auto variants =
          run_enhancement_pipeline(captured, derive_seed(config.seed, "pipeline", static_cast<std::uint64_t>(i)));
      auto& records = per_original[static_cast<std::size_t>(i)];
      for (const auto& v : variants) {
        const std::string image_rel =
            std::string("images/") + id + "_v" + std::to_string(v.trace.variant_index) + ".png";
        write_png(out / image_rel, v.image);
        const auto scores = synthesize_ratings(
            v.image, doc.image, ratings,
            derive_seed(config.seed, "ratings",
                        static_cast<std::uint64_t>(i) * kVariantsPerImage + static_cast<std::uint64_t>(v.trace.variant_index)));
        ingest::DocumentSample s;
        s.image = image_rel;
        s.mask = mask_rel;
        s.origin_id = id;
        for (const auto& d : scores) {
          ingest::DimensionScores ds{d.dimension, {}};
          for (double x : d.scores) ds.scores.emplace_back(x);
          s.rater_scores.push_back(std::move(ds));
        }
        s.trace = v.trace;
        s.extra["distortion"] = std::string(to_string(spec.kind));
        s.extra["severity"] = spec.severity;
        records.push_back(std::move(s));
      }
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw Error(ErrorKind::kIo, "corpus generation failed: " + f);

  std::vector<ingest::DocumentSample> all;
  for (auto& records : per_original)
    for (auto& s : records) all.push_back(std::move(s));
  ingest::aggregate_mos(all);
  ingest::write_manifest(out / "manifest.jsonl", all);

  nlohmann::ordered_json meta;
  meta["generator_version"] = kGeneratorVersion;
  meta["seed"] = config.seed;
  meta["originals"] = config.originals;
  meta["variants_per_original"] = kVariantsPerImage;
  meta["size"] = {config.size.height, config.size.width};
  meta["severity_range"] = {config.min_severity, config.max_severity};
  meta["ratings"] = to_json(ratings);
  std::ofstream os(out / "corpus_meta.json");
  os << meta.dump(2) << "\n";
  if (!os) throw Error(ErrorKind::kIo, "cannot write corpus_meta.json");
  return all.size();
}

}  // namespace dociq::corpus
