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
#include <vector>

#include "dociq/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dociq::kernels {
namespace {

// Output pixels are processed in tiles so one tile of the column matrix
// stays cache resident while every output channel sweeps it.
constexpr int kTile = 256;

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

void im2col(const ConvGeometry& g, const double* input, double* col) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  const int plane = oh * ow;
  const int rows = g.in_channels * k * k;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int ci = r / (k * k);
    const int ky = (r / k) % k;
    const int kx = r % k;
    const double* src = input + static_cast<std::size_t>(ci) * g.in_height * g.in_width;
    double* dst = col + static_cast<std::size_t>(r) * plane;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * g.stride - g.pad + ky;
      double* row = dst + oy * ow;
      if (iy < 0 || iy >= g.in_height) {
        std::fill(row, row + ow, 0.0);
        continue;
      }
      const double* line = src + iy * g.in_width;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * g.stride - g.pad + kx;
        row[ox] = (ix >= 0 && ix < g.in_width) ? line[ix] : 0.0;
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* col, double* grad_input) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  const int plane = oh * ow;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < g.in_channels; ++ci) {
    double* dst = grad_input + static_cast<std::size_t>(ci) * g.in_height * g.in_width;
    std::fill(dst, dst + g.in_height * g.in_width, 0.0);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_height) continue;
          double* line = dst + iy * g.in_width;
          const double* row = src + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_width) line[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  const int plane = g.out_height() * g.out_width();
  const int depth = g.in_channels * g.kernel * g.kernel;
  std::vector<double> scratch;
  const double* col = input.data();
  if (!is_pointwise(g)) {
    scratch.resize(static_cast<std::size_t>(depth) * plane);
    im2col(g, input.data(), scratch.data());
    col = scratch.data();
  }
  const int tiles = (plane + kTile - 1) / kTile;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tiles; ++t) {
    const int p0 = t * kTile;
    const int len = std::min(kTile, plane - p0);
    for (int co = 0; co < g.out_channels; ++co) {
      double* out = output.data() + static_cast<std::size_t>(co) * plane + p0;
      const double b = bias.empty() ? 0.0 : bias[co];
      std::fill(out, out + len, b);
      const double* w = weight.data() + static_cast<std::size_t>(co) * depth;
      for (int r = 0; r < depth; ++r) {
        const double wr = w[r];
        const double* c = col + static_cast<std::size_t>(r) * plane + p0;
        for (int j = 0; j < len; ++j) out[j] += wr * c[j];
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias) {
  const int plane = g.out_height() * g.out_width();
  const int depth = g.in_channels * g.kernel * g.kernel;
  const bool pointwise = is_pointwise(g);
  std::vector<double> scratch;
  const double* col = input.data();
  if (!pointwise) {
    scratch.resize(static_cast<std::size_t>(depth) * plane);
    im2col(g, input.data(), scratch.data());
    col = scratch.data();
  }
  const double* dy = grad_output.data();

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < g.out_channels; ++co) {
      const double* d = dy + static_cast<std::size_t>(co) * plane;
      double acc = 0.0;
      for (int p = 0; p < plane; ++p) acc += d[p];
      grad_bias[co] += acc;
    }
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.out_channels; ++co) {
    for (int r = 0; r < depth; ++r) {
      const double* d = dy + static_cast<std::size_t>(co) * plane;
      const double* c = col + static_cast<std::size_t>(r) * plane;
      double acc = 0.0;
      for (int p = 0; p < plane; ++p) acc += d[p] * c[p];
      grad_weight[static_cast<std::size_t>(co) * depth + r] += acc;
    }
  }

  if (grad_input.empty()) return;
  std::vector<double> dcol_scratch;
  double* dcol = grad_input.data();
  if (!pointwise) {
    dcol_scratch.resize(static_cast<std::size_t>(depth) * plane);
    dcol = dcol_scratch.data();
  }
  const int tiles = (plane + kTile - 1) / kTile;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tiles; ++t) {
    const int p0 = t * kTile;
    const int len = std::min(kTile, plane - p0);
    for (int r = 0; r < depth; ++r) {
      double* dc = dcol + static_cast<std::size_t>(r) * plane + p0;
      std::fill(dc, dc + len, 0.0);
    }
    for (int co = 0; co < g.out_channels; ++co) {
      const double* d = dy + static_cast<std::size_t>(co) * plane + p0;
      const double* w = weight.data() + static_cast<std::size_t>(co) * depth;
      for (int r = 0; r < depth; ++r) {
        const double wr = w[r];
        double* dc = dcol + static_cast<std::size_t>(r) * plane + p0;
        for (int j = 0; j < len; ++j) dc[j] += wr * d[j];
      }
    }
  }
  if (!pointwise) col2im(g, dcol, grad_input.data());
}

void linear_forward(int in, int out, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    const double* w = weight.data() + static_cast<std::size_t>(o) * in;
    double acc = bias.empty() ? 0.0 : bias[o];
    for (int i = 0; i < in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(int in, int out, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> grad_y, std::span<double> grad_x, std::span<double> grad_weight,
                     std::span<double> grad_bias) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    const double gy = grad_y[o];
    if (!grad_bias.empty()) grad_bias[o] += gy;
    double* gw = grad_weight.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) gw[i] += gy * x[i];
  }
  if (grad_x.empty()) return;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < in; ++i) {
    double acc = 0.0;
    for (int o = 0; o < out; ++o) acc += grad_y[o] * weight[static_cast<std::size_t>(o) * in + i];
    grad_x[i] = acc;
  }
}

}  // namespace dociq::kernels
