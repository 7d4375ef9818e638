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

#pragma once

#include <span>

namespace dociq::kernels {

/// Geometry of a square-kernel 2-D convolution over a CHW tensor.
struct ConvGeometry {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  int out_height() const { return (in_height + 2 * pad - kernel) / stride + 1; }
  int out_width() const { return (in_width + 2 * pad - kernel) / stride + 1; }
  int input_size() const { return in_channels * in_height * in_width; }
  int output_size() const { return out_channels * out_height() * out_width(); }
  int weight_size() const { return out_channels * in_channels * kernel * kernel; }
};

// Weights are laid out [out_channel][in_channel][ky][kx]. Backward passes
// accumulate into grad_weight / grad_bias and overwrite grad_input; an empty
// grad_input span skips the input gradient.

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);

void conv2d_backward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias);

/// y = W x + b with W laid out [out][in].
void linear_forward(int in, int out, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y);

void linear_backward(int in, int out, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> grad_y, std::span<double> grad_x, std::span<double> grad_weight,
                     std::span<double> grad_bias);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

/// Serial direct-loop implementations with the same contracts. Kept as the
/// ground truth the parallel kernels are tested and benchmarked against.
namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);

void conv2d_backward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias);

void linear_forward(int in, int out, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y);

void linear_backward(int in, int out, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> grad_y, std::span<double> grad_x, std::span<double> grad_weight,
                     std::span<double> grad_bias);

}  // namespace reference
}  // namespace dociq::kernels
