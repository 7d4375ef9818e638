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

#include "dociq/kernels.hpp"

namespace dociq::kernels::reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  for (int co = 0; co < g.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (int ci = 0; ci < g.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_width) continue;
              acc += weight[((co * g.in_channels + ci) * k + ky) * k + kx] *
                     input[(ci * g.in_height + iy) * g.in_width + ix];
            }
          }
        }
        output[(co * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  if (!grad_input.empty()) std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (int co = 0; co < g.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double go = grad_output[(co * oh + oy) * ow + ox];
        if (!grad_bias.empty()) grad_bias[co] += go;
        for (int ci = 0; ci < g.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_width) continue;
              const int wi = ((co * g.in_channels + ci) * k + ky) * k + kx;
              const int ii = (ci * g.in_height + iy) * g.in_width + ix;
              grad_weight[wi] += go * input[ii];
              if (!grad_input.empty()) grad_input[ii] += go * weight[wi];
            }
          }
        }
      }
    }
  }
}

void linear_forward(int in, int out, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y) {
  for (int o = 0; o < out; ++o) {
    double acc = bias.empty() ? 0.0 : bias[o];
    for (int i = 0; i < in; ++i) acc += weight[o * in + i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(int in, int out, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> grad_y, std::span<double> grad_x, std::span<double> grad_weight,
                     std::span<double> grad_bias) {
  if (!grad_x.empty()) std::fill(grad_x.begin(), grad_x.end(), 0.0);
  for (int o = 0; o < out; ++o) {
    if (!grad_bias.empty()) grad_bias[o] += grad_y[o];
    for (int i = 0; i < in; ++i) {
      grad_weight[o * in + i] += grad_y[o] * x[i];
      if (!grad_x.empty()) grad_x[i] += grad_y[o] * weight[o * in + i];
    }
  }
}

}  // namespace dociq::kernels::reference
