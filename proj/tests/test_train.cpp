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

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "dociq/corpus.hpp"
#include "dociq/error.hpp"
#include "dociq/metrics.hpp"
#include "dociq/train.hpp"
#include "oracles.hpp"

using namespace dociq;
using namespace dociq::train;
using model::ScorePrediction;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

ScorePrediction prediction(int d, int r, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(1.0, 5.0);
  ScorePrediction p;
  p.dimensions = d;
  p.raters = r;
  for (int i = 0; i < d * r; ++i) p.per_rater.push_back(u(gen));
  for (int k = 0; k < d; ++k) {
    double s = 0;
    for (int j = 0; j < r; ++j) s += p.per_rater[static_cast<std::size_t>(k * r + j)];
    p.mos.push_back(s / r);
  }
  return p;
}

RaterTargets targets(int d, int r, std::mt19937_64& gen, double absent_rate) {
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::bernoulli_distribution absent(absent_rate);
  RaterTargets t;
  t.dimensions = d;
  t.raters = r;
  for (int k = 0; k < d; ++k) {
    double s = 0;
    int n = 0;
    for (int j = 0; j < r; ++j) {
      const bool keep = j == 0 || !absent(gen);
      t.scores.push_back(u(gen));
      t.present.push_back(keep ? 1 : 0);
      if (keep) {
        s += t.scores.back();
        ++n;
      }
    }
    t.mos.push_back(s / n);
  }
  return t;
}

// Small synthetic corpus, prepared at the model size.
struct Corpus {
  oracle::TempDir dir{"train"};
  std::vector<ingest::DocumentSample> samples;
  std::vector<PreparedSample> prepared;
  explicit Corpus(const model::ModelConfig& mc, int originals = 2) {
    corpus::CorpusConfig cc;
    cc.originals = originals;
    cc.size = {mc.height, mc.width};
    cc.seed = 5;
    corpus::generate_corpus(dir.path(), cc);
    samples = ingest::load_manifest(dir.path() / "manifest.jsonl");
    prepared = prepare_samples(samples, mc);
  }
};

model::ModelConfig small() {
  model::ModelConfig c = model::ModelConfig::desk();
  c.height = c.width = 128;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("loss is zero at the targets") {
  std::mt19937_64 gen(1);
  const auto t = targets(3, 15, gen, 0.0);
  ScorePrediction p;
  p.dimensions = 3;
  p.raters = 15;
  p.per_rater = t.scores;
  p.mos = t.mos;
  const auto l = multi_rater_loss(p, t, {});
  CHECK(l.value == 0.0);
  for (double g : l.grad_per_rater) CHECK(g == 0.0);
}

TEST_CASE("hand-computed two-rater loss") {
  ScorePrediction p;
  p.dimensions = 1;
  p.raters = 2;
  p.per_rater = {1.0, 3.0};
  p.mos = {2.0};
  RaterTargets t;
  t.dimensions = 1;
  t.raters = 2;
  t.scores = {2.0, 2.0};
  t.present = {1, 1};
  t.mos = {2.0};
  const auto l = multi_rater_loss(p, t, {});
  CHECK(l.value == 1.0);
  CHECK(l.rater_term == 1.0);
  CHECK(l.mos_term == 0.0);
  CHECK(l.grad_per_rater == std::vector<double>{-1.0, 1.0});

  t.present = {1, 0};
  t.mos = {2.0};
  const auto masked = multi_rater_loss(p, t, {});
  CHECK(masked.value == 1.0);
  CHECK(masked.grad_per_rater == std::vector<double>{-2.0, 0.0});

  LossOptions mos_only;
  mos_only.mos_only = true;
  p.mos = {4.0};
  CHECK(multi_rater_loss(p, t, mos_only).value == 4.0);
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 gen(2);
  const auto t = targets(3, 5, gen, 0.3);
  auto p = prediction(3, 5, gen);
  LossOptions o;
  o.weights = {0.7, 1.3};
  const auto l = multi_rater_loss(p, t, o);
  for (std::size_t i = 0; i < p.per_rater.size(); ++i) {
    auto q = p;
    q.per_rater[i] += 1e-6;
    const double up = multi_rater_loss(q, t, o).value;
    q.per_rater[i] -= 2e-6;
    const double down = multi_rater_loss(q, t, o).value;
    CHECK(l.grad_per_rater[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-6));
  }
  for (std::size_t k = 0; k < p.mos.size(); ++k) {
    auto q = p;
    q.mos[k] += 1e-6;
    const double up = multi_rater_loss(q, t, o).value;
    q.mos[k] -= 2e-6;
    const double down = multi_rater_loss(q, t, o).value;
    CHECK(l.grad_mos[k] == doctest::Approx((up - down) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("perturbing absent targets never changes the loss") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = targets(3, 15, gen, 0.4);
    const auto p = prediction(3, 15, gen);
    auto perturbed = t;
    for (std::size_t i = 0; i < perturbed.scores.size(); ++i)
      if (!perturbed.present[i]) perturbed.scores[i] += u(gen);
    for (bool oi : {false, true}) {
      LossOptions o;
      o.order_invariant = oi;
      const auto a = multi_rater_loss(p, t, o);
      const auto b = multi_rater_loss(p, perturbed, o);
      CHECK(a.value == b.value);
      CHECK(a.grad_per_rater == b.grad_per_rater);
      if (!oi) {
        for (std::size_t i = 0; i < t.present.size(); ++i)
          if (!t.present[i]) CHECK(a.grad_per_rater[i] == 0.0);
      }
    }
  }
}

TEST_CASE("invalid targets") {
  std::mt19937_64 gen(4);
  auto t = targets(1, 3, gen, 0.0);
  const auto p = prediction(1, 3, gen);
  t.present = {0, 0, 0};
  CHECK(kind_of([&] { multi_rater_loss(p, t, {}); }) == ErrorKind::kInvalidTarget);
  auto wrong = targets(2, 3, gen, 0.0);
  CHECK(kind_of([&] { multi_rater_loss(p, wrong, {}); }) == ErrorKind::kInvalidTarget);
}

TEST_CASE("order-invariant loss ignores rater identity") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = targets(2, 6, gen, 0.0);
    const auto p = prediction(2, 6, gen);
    auto shuffled = t;
    for (int d = 0; d < 2; ++d) {
      auto b = shuffled.scores.begin() + d * 6;
      std::shuffle(b, b + 6, gen);
    }
    LossOptions o;
    o.order_invariant = true;
    const auto a = multi_rater_loss(p, t, o);
    CHECK(a.value == doctest::Approx(multi_rater_loss(p, shuffled, o).value).epsilon(1e-12));
    CHECK(a.value <= multi_rater_loss(p, t, {}).value + 1e-12);
  }
}

TEST_CASE("step schedule") {
  TrainConfig c;
  CHECK(std::abs(lr_schedule(c, 0) - 2e-4) <= 1e-12);
  CHECK(std::abs(lr_schedule(c, 10) - 1.2e-4) <= 1e-12);
  CHECK(std::abs(lr_schedule(c, 59) - 2e-4 * std::pow(0.6, 5)) <= 1e-12);
  for (int e = 1; e < 60; ++e) {
    CHECK(lr_schedule(c, e) <= lr_schedule(c, e - 1));
    if (e % 10 != 0) CHECK(lr_schedule(c, e) == lr_schedule(c, e - 1));
  }
}

TEST_CASE("train config validation and serialization") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch = 0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::kConfiguration);
  c = {};
  c.lr = -1;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::kConfiguration);
  const auto j = to_json(TrainConfig{});
  CHECK(j.at("lr") == 2e-4);
  CHECK(j.at("step_size") == 10);
  CHECK(j.at("decay") == 0.6);
  CHECK(j.at("epochs") == 60);
  CHECK(j.at("batch") == 20);
}

TEST_CASE("ablation flags") {
  CHECK(Ablations{}.label() == "full");
  const auto a = Ablations::parse("no_layout,no_multirater");
  CHECK(a.no_layout);
  CHECK(!a.no_fusion);
  CHECK(a.no_multirater);
  CHECK(a.label() == "no_layout+no_multirater");
  CHECK(kind_of([] { Ablations::parse("no_heads"); }) == ErrorKind::kConfiguration);
  const auto table = ablation_table();
  REQUIRE(table.size() == 5);
  CHECK(table[0].label() == "full");
  model::ModelConfig m;
  apply_ablations(m, Ablations::parse("no_fusion"));
  CHECK(!m.feature_fusion);
  CHECK(m.layout_path);
}

TEST_CASE("run config files") {
  const auto rc = parse_run_config("# desk run\nlr = 1e-3\nepochs=5\n\nheight = 128\nwidth = 128\nno_fusion = true\n");
  CHECK(rc.train.lr == 1e-3);
  CHECK(rc.train.epochs == 5);
  CHECK(rc.model.height == 128);
  CHECK(rc.train.ablations.no_fusion);
  const auto back = parse_run_config(format_run_config(rc));
  CHECK(format_run_config(back) == format_run_config(rc));
  try {
    parse_run_config("lr = 1\nbogus = 3\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfiguration);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(kind_of([] { parse_run_config("epochs = many\n"); }) == ErrorKind::kConfiguration);
  CHECK(kind_of([] { parse_run_config("just text\n"); }) == ErrorKind::kConfiguration);
}

TEST_CASE("evaluation against oracle predictions") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<std::vector<double>> truth(3), noise(3);
  for (int d = 0; d < 3; ++d)
    for (int i = 0; i < 500; ++i) {
      truth[static_cast<std::size_t>(d)].push_back(u(gen));
      noise[static_cast<std::size_t>(d)].push_back(u(gen));
    }
  const std::vector<std::string> dims = {"overall", "sharpness", "color_fidelity"};
  const auto same = evaluate_predictions(dims, truth, truth);
  CHECK(same.samples == 500);
  REQUIRE(same.dimensions.size() == 3);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(same.dimensions[d].dimension == dims[d]);
    CHECK(same.dimensions[d].srcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.dimensions[d].plcc == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto random = evaluate_predictions(dims, noise, truth);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(std::abs(random.dimensions[d].srcc) < 0.15);
    CHECK(random.dimensions[d].srcc == doctest::Approx(oracle::spearman(noise[d], truth[d])).epsilon(1e-9));
  }
  CHECK(random.average_srcc ==
        doctest::Approx((random.dimensions[0].srcc + random.dimensions[1].srcc + random.dimensions[2].srcc) / 3));
  std::vector<std::vector<double>> flat(3, std::vector<double>(500, 2.0));
  try {
    evaluate_predictions(dims, flat, truth);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUndefinedCorrelation);
    CHECK(std::string(e.what()).find("overall") != std::string::npos);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Corpus c(small());
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 4;
  tc.max_steps = 6;
  tc.augment = true;
  tc.seed = 11;
  auto run = [&] {
    model::DocIQModel m(small());
    std::ostringstream log;
    const auto r = train::train(m, std::span(c.prepared).first(12), std::span(c.prepared).subspan(12), tc, &log);
    CHECK(r.steps == 6);
    return std::pair{log.str(), m.parameters()[0].value};
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(std::count(a.first.begin(), a.first.end(), '\n') == 2);
  CHECK(a.first.find("\"validation\":{") != std::string::npos);
}

TEST_CASE("every ablation row trains a step with its own parameter count") {
  const Corpus c(small(), 1);
  std::set<std::size_t> counts;
  for (const auto& ab : ablation_table()) {
    auto mc = small();
    apply_ablations(mc, ab);
    model::DocIQModel m(mc);
    TrainConfig tc;
    tc.ablations = ab;
    tc.batch = 2;
    tc.max_steps = 1;
    const auto before = m.parameters()[0].value;
    const auto r = train::train(m, std::span(c.prepared).first(4), {}, tc);
    CHECK(r.steps == 1);
    CHECK(r.best_epoch == 0);
    CHECK(m.parameters()[0].value != before);
    counts.insert(r.parameter_count);
  }
  CHECK(counts.size() == 5);

  model::DocIQModel m(small());
  TrainConfig tc;
  tc.ablations.no_multirater = true;
  CHECK(kind_of([&] { train::train(m, c.prepared, {}, tc); }) == ErrorKind::kConfiguration);
  CHECK(kind_of([&] { train::train(m, {}, {}, TrainConfig{}); }) == ErrorKind::kNoData);
}

TEST_CASE("non-finite parameters raise a divergence error") {
  const Corpus c(small(), 1);
  model::DocIQModel m(small());
  auto& p = m.parameters()[m.parameters().find("head.shared.weight")];
  p.value[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.batch = 2;
  try {
    train::train(m, std::span(c.prepared).first(4), {}, tc);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
  }
}

TEST_CASE("head bias initialization sets the mean training mos") {
  const Corpus c(small(), 1);
  model::DocIQModel m(small());
  initialize_head_bias(m, c.prepared);
  for (int d = 0; d < 3; ++d) {
    double mean = 0;
    for (const auto& s : c.prepared) mean += s.targets.mos[static_cast<std::size_t>(d)] / static_cast<double>(c.prepared.size());
    const auto& b = m.parameters()[m.parameters().find("head.dim" + std::to_string(d) + ".bias")];
    for (double v : b.value) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("validation carve keeps origins apart and falls back when infeasible") {
  const Corpus c(small(), 3);
  TrainConfig tc;
  tc.validation_fraction = 0.34;
  const auto parts = validation_split(c.samples, tc);
  CHECK(!parts.test.empty());
  std::set<std::string> a;
  for (auto i : parts.train) a.insert(c.samples[i].origin_id);
  for (auto i : parts.test) CHECK(a.count(c.samples[i].origin_id) == 0);
  const std::vector<ingest::DocumentSample> single(c.samples.begin(), c.samples.begin() + 10);
  const auto all = validation_split(single, tc);
  CHECK(all.train.size() == 10);
  CHECK(all.test.empty());
}
