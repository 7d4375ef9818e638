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

// Parallel kernels against the serial reference on backbone-shaped layers.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dociq/kernels.hpp"

namespace {

using dociq::kernels::ConvGeometry;

std::vector<double> random_values(std::size_t n) {
  std::mt19937_64 gen(n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

ConvGeometry geometry(const benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const int kernel = static_cast<int>(state.range(2));
  return {channels, side, side, channels, kernel, 1, kernel / 2};
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const ConvGeometry g = geometry(state);
  const auto in = random_values(static_cast<std::size_t>(g.input_size()));
  const auto w = random_values(static_cast<std::size_t>(g.weight_size()));
  const auto b = random_values(static_cast<std::size_t>(g.out_channels));
  std::vector<double> out(static_cast<std::size_t>(g.output_size()));
  for (auto _ : state) {
    if constexpr (Parallel) {
      dociq::kernels::conv2d_forward(g, in, w, b, out);
    } else {
      dociq::kernels::reference::conv2d_forward(g, in, w, b, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.output_size()) * g.in_channels * g.kernel *
                          g.kernel);
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const ConvGeometry g = geometry(state);
  const auto in = random_values(static_cast<std::size_t>(g.input_size()));
  const auto w = random_values(static_cast<std::size_t>(g.weight_size()));
  const auto gy = random_values(static_cast<std::size_t>(g.output_size()));
  std::vector<double> gx(in.size());
  std::vector<double> gw(w.size());
  std::vector<double> gb(static_cast<std::size_t>(g.out_channels));
  for (auto _ : state) {
    if constexpr (Parallel) {
      dociq::kernels::conv2d_backward(g, in, w, gy, gx, gw, gb);
    } else {
      dociq::kernels::reference::conv2d_backward(g, in, w, gy, gx, gw, gb);
    }
    benchmark::DoNotOptimize(gx.data());
  }
}

template <bool Parallel>
void BM_Linear(benchmark::State& state) {
  const int in = static_cast<int>(state.range(0));
  const int out = static_cast<int>(state.range(1));
  const auto x = random_values(static_cast<std::size_t>(in));
  const auto w = random_values(static_cast<std::size_t>(in) * out);
  const auto b = random_values(static_cast<std::size_t>(out));
  std::vector<double> y(static_cast<std::size_t>(out));
  for (auto _ : state) {
    if constexpr (Parallel) {
      dociq::kernels::linear_forward(in, out, x, w, b, y);
    } else {
      dociq::kernels::reference::linear_forward(in, out, x, w, b, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({16, 64, 3})->Args({32, 32, 3})->Args({64, 16, 3})->Args({128, 8, 1})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Apply(conv_args);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Apply(conv_args);
BENCHMARK(BM_Linear<true>)->Name("linear/parallel")->Args({2048, 512})->Args({128, 64});
BENCHMARK(BM_Linear<false>)->Name("linear/reference")->Args({2048, 512})->Args({128, 64});

BENCHMARK_MAIN();
