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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dociq/kernels.hpp"
#include "dociq/random.hpp"

namespace dociq::nn {

/// Dense CHW tensor of doubles for a single sample. Feature vectors are
/// stored as C x 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : channels_(channels),
        height_(height),
        width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  static Tensor vector(int length, double fill = 0.0) { return Tensor(length, 1, 1, fill); }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Tensor& operator+=(const Tensor& o);

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
};

/// Flat, ordered store of named parameters. Layers hold indices into it so a
/// model definition and its weights stay separate.
class ParameterSet {
 public:
  int add(std::string name, std::vector<int> shape);

  Parameter& operator[](int id) { return params_[static_cast<std::size_t>(id)]; }
  const Parameter& operator[](int id) const { return params_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t scalar_count() const;

  /// -1 when absent.
  int find(const std::string& name) const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> index_;
};

/// Gradient buffers aligned with a ParameterSet.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet& params);

  std::span<double> operator[](int id) { return grads_[static_cast<std::size_t>(id)]; }
  std::span<const double> operator[](int id) const { return grads_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(grads_.size()); }

  void zero();
  void scale(double factor);
  Gradients& operator+=(const Gradients& other);

 private:
  std::vector<std::vector<double>> grads_;
};

enum class Activation { kRelu, kSilu };

Tensor activate(Activation act, const Tensor& pre);
/// Gradient w.r.t. the pre-activation given the upstream gradient.
Tensor activate_backward(Activation act, const Tensor& pre, const Tensor& grad);

/// Square-kernel convolution with bias.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterSet& params, const std::string& name, int in_channels, int out_channels, int kernel,
         int stride, int pad);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int stride() const { return stride_; }

  kernels::ConvGeometry geometry(int height, int width) const;

  Tensor forward(const ParameterSet& params, const Tensor& x) const;
  /// Accumulates parameter gradients; returns dL/dx (empty when !need_input_grad).
  Tensor backward(const ParameterSet& params, const Tensor& x, const Tensor& grad_out, Gradients& grads,
                  bool need_input_grad = true) const;

  /// He-normal weights scaled by `gain`, zero bias.
  void initialize(ParameterSet& params, Rng& rng, double gain = 1.0) const;

  int weight_id() const { return weight_; }
  int bias_id() const { return bias_; }

 private:
  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;
  int weight_ = -1;
  int bias_ = -1;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, int in_features, int out_features);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Tensor forward(const ParameterSet& params, const Tensor& x) const;
  Tensor backward(const ParameterSet& params, const Tensor& x, const Tensor& grad_out, Gradients& grads) const;

  void initialize(ParameterSet& params, Rng& rng, double gain = 1.0) const;

  int weight_id() const { return weight_; }
  int bias_id() const { return bias_; }

 private:
  int in_ = 0;
  int out_ = 0;
  int weight_ = -1;
  int bias_ = -1;
};

Tensor global_average_pool(const Tensor& x);
Tensor global_average_pool_backward(const Tensor& grad, int height, int width);

}  // namespace dociq::nn
