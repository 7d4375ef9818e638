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

#include "dociq/nn.hpp"

#include <cmath>
#include <numeric>

#include "dociq/error.hpp"

namespace dociq::nn {

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o)) throw Error(ErrorKind::kInvalidArgument, "tensor shape mismatch in addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

int ParameterSet::add(std::string name, std::vector<int> shape) {
  if (index_.count(name) != 0) throw Error(ErrorKind::kConfiguration, "duplicate parameter " + name);
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  const int id = static_cast<int>(params_.size());
  index_.emplace(name, id);
  params_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return id;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

int ParameterSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Gradients::Gradients(const ParameterSet& params) {
  grads_.reserve(static_cast<std::size_t>(params.size()));
  for (const auto& p : params) grads_.emplace_back(p.value.size(), 0.0);
}

void Gradients::zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

void Gradients::scale(double factor) {
  for (auto& g : grads_)
    for (double& v : g) v *= factor;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i)
    for (std::size_t j = 0; j < grads_[i].size(); ++j) grads_[i][j] += other.grads_[i][j];
  return *this;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor activate(Activation act, const Tensor& pre) {
  Tensor out = pre;
  auto v = out.values();
  switch (act) {
    case Activation::kRelu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::kSilu:
      for (double& x : v) x = x * sigmoid(x);
      break;
  }
  return out;
}

Tensor activate_backward(Activation act, const Tensor& pre, const Tensor& grad) {
  Tensor out = grad;
  auto g = out.values();
  auto p = pre.values();
  switch (act) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (p[i] <= 0.0) g[i] = 0.0;
      break;
    case Activation::kSilu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = sigmoid(p[i]);
        g[i] *= s * (1.0 + p[i] * (1.0 - s));
      }
      break;
  }
  return out;
}

Conv2d::Conv2d(ParameterSet& params, const std::string& name, int in_channels, int out_channels, int kernel,
               int stride, int pad)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_ = params.add(name + ".weight", {out_channels, in_channels, kernel, kernel});
  bias_ = params.add(name + ".bias", {out_channels});
}

kernels::ConvGeometry Conv2d::geometry(int height, int width) const {
  return {in_, height, width, out_, kernel_, stride_, pad_};
}

Tensor Conv2d::forward(const ParameterSet& params, const Tensor& x) const {
  if (x.channels() != in_) {
    throw Error(ErrorKind::kInvalidArgument, "conv expects " + std::to_string(in_) + " input channels, got " +
                                                 std::to_string(x.channels()));
  }
  const auto g = geometry(x.height(), x.width());
  Tensor y(out_, g.out_height(), g.out_width());
  kernels::conv2d_forward(g, x.values(), params[weight_].value, params[bias_].value, y.values());
  return y;
}

Tensor Conv2d::backward(const ParameterSet& params, const Tensor& x, const Tensor& grad_out, Gradients& grads,
                        bool need_input_grad) const {
  const auto g = geometry(x.height(), x.width());
  Tensor dx;
  if (need_input_grad) dx = Tensor(in_, x.height(), x.width());
  kernels::conv2d_backward(g, x.values(), params[weight_].value, grad_out.values(),
                           need_input_grad ? dx.values() : std::span<double>{}, grads[weight_], grads[bias_]);
  return dx;
}

void Conv2d::initialize(ParameterSet& params, Rng& rng, double gain) const {
  const double sd = gain * std::sqrt(2.0 / (in_ * kernel_ * kernel_));
  for (double& w : params[weight_].value) w = rng.normal(0.0, sd);
  std::fill(params[bias_].value.begin(), params[bias_].value.end(), 0.0);
}

Linear::Linear(ParameterSet& params, const std::string& name, int in_features, int out_features)
    : in_(in_features), out_(out_features) {
  weight_ = params.add(name + ".weight", {out_features, in_features});
  bias_ = params.add(name + ".bias", {out_features});
}

Tensor Linear::forward(const ParameterSet& params, const Tensor& x) const {
  if (static_cast<int>(x.size()) != in_) {
    throw Error(ErrorKind::kInvalidArgument, "linear expects " + std::to_string(in_) + " features, got " +
                                                 std::to_string(x.size()));
  }
  Tensor y = Tensor::vector(out_);
  kernels::linear_forward(in_, out_, x.values(), params[weight_].value, params[bias_].value, y.values());
  return y;
}

Tensor Linear::backward(const ParameterSet& params, const Tensor& x, const Tensor& grad_out,
                        Gradients& grads) const {
  Tensor dx = Tensor::vector(in_);
  kernels::linear_backward(in_, out_, x.values(), params[weight_].value, grad_out.values(), dx.values(),
                           grads[weight_], grads[bias_]);
  return dx;
}

void Linear::initialize(ParameterSet& params, Rng& rng, double gain) const {
  const double sd = gain * std::sqrt(2.0 / in_);
  for (double& w : params[weight_].value) w = rng.normal(0.0, sd);
  std::fill(params[bias_].value.begin(), params[bias_].value.end(), 0.0);
}

Tensor global_average_pool(const Tensor& x) {
  Tensor out = Tensor::vector(x.channels());
  const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
  auto v = x.values();
  for (int c = 0; c < x.channels(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += v[c * plane + i];
    out[static_cast<std::size_t>(c)] = acc / static_cast<double>(plane);
  }
  return out;
}

Tensor global_average_pool_backward(const Tensor& grad, int height, int width) {
  Tensor out(grad.channels(), height, width);
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  auto v = out.values();
  for (int c = 0; c < grad.channels(); ++c) {
    const double g = grad[static_cast<std::size_t>(c)] / static_cast<double>(plane);
    std::fill(v.begin() + static_cast<std::ptrdiff_t>(c * plane),
              v.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane), g);
  }
  return out;
}

}  // namespace dociq::nn
