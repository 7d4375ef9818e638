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

#include <algorithm>
#include <cmath>
#include <vector>

#include "dociq/model.hpp"
#include "dociq/random.hpp"

namespace gradcheck {

struct Result {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::string worst;
};

/// Loss = sum(a * per_rater) + sum(b * mos) with fixed random coefficients,
/// so the analytic upstream gradients are exactly a and b.
struct Probe {
  std::vector<double> a;
  std::vector<double> b;
  double loss(const dociq::model::ScorePrediction& p) const {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * p.per_rater[i];
    for (std::size_t i = 0; i < b.size(); ++i) s += b[i] * p.mos[i];
    return static_cast<double>(s);
  }
};

inline Result check(dociq::model::DocIQModel& model, const dociq::nn::Tensor& image,
                    const dociq::LayoutMask* mask, std::size_t target, std::uint64_t seed, double h = 1e-5) {
  const auto& cfg = model.config();
  dociq::Rng rng(seed);
  Probe probe;
  for (int i = 0; i < cfg.dimension_count() * cfg.outputs_per_head(); ++i) probe.a.push_back(rng.uniform(-1, 1));
  for (int i = 0; i < cfg.dimension_count(); ++i) probe.b.push_back(rng.uniform(-1, 1));

  dociq::model::ForwardCache cache;
  model.forward(image, mask, &cache);
  dociq::nn::Gradients grads(model.parameters());
  model.backward(cache, probe.a, probe.b, grads);

  // Stratified: every tensor contributes, larger tensors proportionally more.
  auto& params = model.parameters();
  const double total = static_cast<double>(params.scalar_count());
  Result out;
  for (int id = 0; id < params.size(); ++id) {
    auto& p = params[id];
    const std::size_t n = p.value.size();
    const std::size_t take = std::min<std::size_t>(
        n, std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(target * static_cast<double>(n) / total))));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)));
      const double saved = p.value[idx];
      p.value[idx] = saved + h;
      const double up = probe.loss(model.forward(image, mask));
      p.value[idx] = saved - h;
      const double down = probe.loss(model.forward(image, mask));
      p.value[idx] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[id][idx];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      ++out.checked;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = p.name + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return out;
}

}  // namespace gradcheck
