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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dociq/corpus.hpp"
#include "dociq/error.hpp"
#include "dociq/ingest.hpp"
#include "oracles.hpp"
#include "screening_fixtures.hpp"

using namespace dociq;
using namespace dociq::ingest;
using fixtures::adversarial_matrix;
using fixtures::to_matrix;

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

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

// A directory with one tiny image so manifests can reference it.
struct Fixture {
  oracle::TempDir dir{"ingest"};
  Fixture() {
    RgbImage img(4, 4);
    write_png(dir.path() / "a.png", img);
  }
  std::filesystem::path manifest(const std::string& text) const {
    const auto p = dir.path() / "manifest.jsonl";
    write_file(p, text);
    return p;
  }
};

// Independent BT.500 counts: per image mean, sample sd and moment kurtosis,
// then strict comparisons against the kurtosis-gated band.
std::vector<std::pair<int, int>> oracle_counts(const std::vector<std::vector<double>>& m) {
  const std::size_t raters = m.size();
  const std::size_t images = m.front().size();
  std::vector<std::pair<int, int>> pq(raters);
  for (std::size_t i = 0; i < images; ++i) {
    std::vector<double> col;
    for (std::size_t r = 0; r < raters; ++r) col.push_back(m[r][i]);
    const double n = static_cast<double>(col.size());
    double mu = 0;
    for (double x : col) mu += x / n;
    double m2 = 0, m4 = 0, ss = 0;
    for (double x : col) {
      m2 += std::pow(x - mu, 2) / n;
      m4 += std::pow(x - mu, 4) / n;
      ss += std::pow(x - mu, 2);
    }
    const double sd = std::sqrt(ss / (n - 1));
    const double beta = m2 == 0 ? 3.0 : m4 / (m2 * m2);
    const double k = (beta >= 2 && beta <= 4) ? 2.0 : std::sqrt(20.0);
    for (std::size_t r = 0; r < raters; ++r) {
      if (col[r] > mu + k * sd) ++pq[r].first;
      if (col[r] < mu - k * sd) ++pq[r].second;
    }
  }
  return pq;
}

}  // namespace

TEST_CASE("empty manifest loads as an empty list") {
  Fixture f;
  CHECK(load_manifest(f.manifest("")).empty());
}

TEST_CASE("single record round-trips with recomputed mos") {
  Fixture f;
  const std::string line =
      R"({"image":"a.png","mask":null,"origin_id":"o1","scores":{"overall":[2.0,2.0,3.0,5.0]},"mos":{"overall":3.0},"note":"kept"})";
  const auto p = f.manifest(line + "\n");
  const auto samples = load_manifest(p);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].mos("overall") == 3.0);
  CHECK(samples[0].extra.at("note") == "kept");
  const auto out = f.dir.path() / "copy.jsonl";
  write_manifest(out, samples);
  CHECK(slurp(out) == slurp(p));
}

TEST_CASE("generated manifests round-trip byte for byte") {
  oracle::TempDir dir("roundtrip");
  corpus::CorpusConfig cfg;
  cfg.originals = 2;
  cfg.size = {64, 64};
  corpus::generate_corpus(dir.path(), cfg);
  const auto p = dir.path() / "manifest.jsonl";
  write_manifest(dir.path() / "again.jsonl", load_manifest(p));
  CHECK(slurp(dir.path() / "again.jsonl") == slurp(p));
}

TEST_CASE("manifest errors") {
  Fixture f;
  SUBCASE("score outside the range") {
    const auto p = f.manifest(R"({"image":"a.png","origin_id":"o","scores":{"overall":[3.0,6.2]}})");
    try {
      load_manifest(p);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("malformed line names its number") {
    const auto p = f.manifest(R"({"image":"a.png","origin_id":"o","scores":{"overall":[3.0]}})"
                              "\n\n{not json\n");
    try {
      load_manifest(p);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("missing image") {
    const auto p = f.manifest(R"({"image":"nope.png","origin_id":"o","scores":{"overall":[3.0]}})");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kIntegrity);
  }
  SUBCASE("stored mos disagreeing with the scores") {
    const auto p = f.manifest(R"({"image":"a.png","origin_id":"o","scores":{"overall":[3.0,4.0]},"mos":{"overall":3.6}})");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kParse);
  }
  SUBCASE("dimension with every score missing") {
    const auto p = f.manifest(R"({"image":"a.png","origin_id":"o","scores":{"overall":[null,null]}})");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kParse);
  }
}

TEST_CASE("aggregate_mos is the mean of retained scores") {
  auto make = [](std::vector<std::optional<double>> scores) {
    DocumentSample s;
    s.image = "x";
    s.rater_scores.push_back({"overall", std::move(scores), 0.0, 0.0});
    return s;
  };
  auto a = make(std::vector<std::optional<double>>(15, 3.0));
  aggregate_mos(a);
  CHECK(a.mos("overall") == 3.0);
  CHECK(a.rater_scores[0].mos_sd == 0.0);
  auto b = make({1.0, 2.0, 3.0, 4.0, 5.0});
  aggregate_mos(b);
  CHECK(b.mos("overall") == 3.0);
  CHECK(b.rater_scores[0].mos_sd == doctest::Approx(std::sqrt(2.0)));
  auto c = make({2.0, 2.0, 3.0, 5.0});
  aggregate_mos(c);
  CHECK(c.mos("overall") == (2.0 + 2.0 + 3.0 + 5.0) / 4.0);
  auto d = make({2.0, std::nullopt, 4.0});
  aggregate_mos(d);
  CHECK(d.mos("overall") == 3.0);
  auto e = make({std::nullopt, std::nullopt});
  CHECK(kind_of([&] { aggregate_mos(e); }) == ErrorKind::kMissingScores);
}

TEST_CASE("identical raters are never rejected") {
  const auto r = screen_raters(to_matrix(fixtures::concordant_matrix()));
  CHECK(r.rejected.empty());
  CHECK(r.matrix.rater_count() == 15);
}

TEST_CASE("the alternating rater is the only one rejected") {
  const auto m = adversarial_matrix();
  const auto pq = oracle_counts(m);
  CHECK(pq[14] == std::pair{25, 25});
  for (int r = 0; r < 14; ++r) CHECK(pq[static_cast<std::size_t>(r)] == std::pair{0, 0});
  const auto counts = bt500_counts(to_matrix(m));
  for (std::size_t r = 0; r < 15; ++r) {
    CHECK(counts[r].above == pq[r].first);
    CHECK(counts[r].below == pq[r].second);
  }
  const auto result = screen_raters(to_matrix(m));
  REQUIRE(result.rejected.size() == 1);
  CHECK(result.rejected.front() == "r14");
  CHECK(result.matrix.rater_count() == 14);
}

TEST_CASE("library counts agree with the oracle on random matrices") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> noise(0.0, 0.6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> m(12, std::vector<double>(30));
    for (auto& row : m)
      for (double& x : row) x = 3.0 + noise(gen) + (std::uniform_real_distribution<double>(0, 1)(gen) < 0.05 ? 3 : 0);
    const auto pq = oracle_counts(m);
    const auto counts = bt500_counts(to_matrix(m));
    for (std::size_t r = 0; r < m.size(); ++r) {
      CHECK(counts[r].above == pq[r].first);
      CHECK(counts[r].below == pq[r].second);
    }
  }
}

TEST_CASE("screening is idempotent on simulated panels") {
  int rejected_total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = fixtures::simulated_panel(trial);
    const auto first = screen_raters(to_matrix(m));
    rejected_total += static_cast<int>(first.rejected.size());
    const auto second = screen_raters(first.matrix);
    CHECK(second.rejected.empty());
    CHECK(second.matrix.rater_ids == first.matrix.rater_ids);
    CHECK(first.matrix.rater_count() <= 15);
  }
  CHECK(rejected_total > 0);
}

TEST_CASE("screening preconditions and degenerate outcomes") {
  std::vector<std::vector<double>> two(2, std::vector<double>(5, 3.0));
  CHECK(kind_of([&] { screen_raters(to_matrix(two)); }) == ErrorKind::kInvalidArgument);
  std::vector<std::vector<double>> one_image(5, std::vector<double>(1, 3.0));
  CHECK(kind_of([&] { screen_raters(to_matrix(one_image)); }) == ErrorKind::kInvalidArgument);

  // Eight raters; per image seven sit on an even grid over 3 +- 0.65 and one
  // of raters 0..5 (rotating) scores 1 or 5. Kurtosis 3.57, outlier z 2.11,
  // so each of raters 0..5 is outside the band symmetrically in 10 of 60
  // images and all six go, leaving two.
  std::vector<std::vector<double>> m(8, std::vector<double>(60));
  for (int i = 0; i < 60; ++i) {
    const int out = i % 6;
    int k = 0;
    for (int r = 0; r < 8; ++r) {
      if (r == out) {
        m[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] = (i / 6) % 2 ? 5.0 : 1.0;
      } else {
        m[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] = 3.0 - 0.65 + 1.3 * k++ / 6.0;
      }
    }
  }
  CHECK(kind_of([&] { screen_raters(to_matrix(m)); }) == ErrorKind::kScreeningDegenerate);
}

TEST_CASE("missing entries stay marked and do not count") {
  auto m = to_matrix(adversarial_matrix());
  m.at(14, 0) = std::nullopt;
  m.at(3, 7) = std::nullopt;
  const auto counts = bt500_counts(m);
  CHECK(counts[14].compared == 49);
  CHECK(counts[3].compared == 49);
  const auto r = screen_raters(m);
  CHECK(r.rejected == std::vector<std::string>{"r14"});
  CHECK_FALSE(r.matrix.at(3, 7).has_value());
}

TEST_CASE("screen_samples nulls rejected raters per dimension") {
  const auto m = adversarial_matrix();
  std::vector<DocumentSample> samples;
  for (int i = 0; i < 50; ++i) {
    DocumentSample s;
    s.image = "img" + std::to_string(i);
    s.origin_id = "o" + std::to_string(i);
    DimensionScores a{"overall", {}, 0, 0};
    DimensionScores b{"sharpness", {}, 0, 0};
    for (int r = 0; r < 15; ++r) {
      a.scores.emplace_back(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)]);
      b.scores.emplace_back(3.0);
    }
    s.rater_scores = {a, b};
    samples.push_back(std::move(s));
  }
  const auto report = screen_samples(samples);
  REQUIRE(report.size() == 2);
  CHECK(report[0].rejected == std::vector<std::string>{"14"});
  CHECK(report[1].rejected.empty());
  for (const auto& s : samples) {
    CHECK_FALSE(s.rater_scores[0].scores[14].has_value());
    CHECK(s.rater_scores[1].scores[14].has_value());
    double mean = 0;
    for (int r = 0; r < 14; ++r) mean += *s.rater_scores[0].scores[static_cast<std::size_t>(r)] / 14.0;
    CHECK(std::abs(s.mos("overall") - mean) < 1e-9);
  }
}

namespace {

std::vector<DocumentSample> grouped(int origins, int variants) {
  std::vector<DocumentSample> v;
  for (int o = 0; o < origins; ++o)
    for (int k = 0; k < variants; ++k) {
      DocumentSample s;
      s.image = "o" + std::to_string(o) + "_" + std::to_string(k);
      s.origin_id = "o" + std::to_string(o);
      v.push_back(s);
    }
  return v;
}

}  // namespace

TEST_CASE("grouped 80/20 split of 10 origins by 10 variants") {
  const auto samples = grouped(10, 10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitSpec spec;
    spec.seed = seed;
    const auto [train, test] = split_dataset(samples, spec);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);
    std::set<std::string> a, b;
    for (const auto& s : train) a.insert(s.origin_id);
    for (const auto& s : test) b.insert(s.origin_id);
    for (const auto& id : a) CHECK(b.count(id) == 0);
    const auto again = split_indices(samples, spec);
    const auto first = split_indices(samples, spec);
    CHECK(again.train == first.train);
  }
}

TEST_CASE("three origins at fraction one half") {
  const auto samples = grouped(3, 4);
  std::set<std::pair<std::size_t, std::size_t>> outcomes;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SplitSpec spec;
    spec.train_fraction = 0.5;
    spec.seed = seed;
    const auto [train, test] = split_dataset(samples, spec);
    std::set<std::string> a, b;
    for (const auto& s : train) a.insert(s.origin_id);
    for (const auto& s : test) b.insert(s.origin_id);
    for (const auto& id : a) CHECK(b.count(id) == 0);
    outcomes.insert({a.size(), b.size()});
  }
  for (const auto& [a, b] : outcomes) {
    CHECK(a + b == 3);
    CHECK(a >= 1);
    CHECK(b >= 1);
  }
}

TEST_CASE("split errors and ungrouped mode") {
  const auto one = grouped(1, 5);
  CHECK(kind_of([&] { split_indices(one, {}); }) == ErrorKind::kSplitInfeasible);
  SplitSpec loose;
  loose.group_by_origin = false;
  const auto parts = split_indices(one, loose);
  CHECK(parts.train.size() == 4);
  CHECK(parts.test.size() == 1);
  SplitSpec bad;
  bad.train_fraction = 1.0;
  CHECK(kind_of([&] { split_indices(grouped(3, 1), bad); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("grouped split never straddles an origin for random group sizes") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DocumentSample> samples;
    const int origins = 2 + static_cast<int>(gen() % 12);
    for (int o = 0; o < origins; ++o) {
      const int n = 1 + static_cast<int>(gen() % 10);
      for (int k = 0; k < n; ++k) {
        DocumentSample s;
        s.origin_id = "o" + std::to_string(o);
        samples.push_back(s);
      }
    }
    SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(trial);
    const auto parts = split_indices(samples, spec);
    std::set<std::string> a;
    for (auto i : parts.train) a.insert(samples[i].origin_id);
    for (auto i : parts.test) CHECK(a.count(samples[i].origin_id) == 0);
    CHECK(parts.train.size() + parts.test.size() == samples.size());
  }
}
