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
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dociq/app.hpp"
#include "dociq/error.hpp"
#include "dociq/image.hpp"
#include "dociq/ingest.hpp"
#include "oracles.hpp"

using namespace dociq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = app::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Manifest whose records all share one image and carry the given MOS.
fs::path mos_manifest(const fs::path& dir, const std::vector<double>& mos) {
  write_png(dir / "a.png", RgbImage(4, 4));
  std::ofstream os(dir / "manifest.jsonl");
  for (double m : mos) {
    nlohmann::ordered_json j;
    j["image"] = "a.png";
    j["origin_id"] = "o";
    j["scores"]["overall"] = {m, m};
    os << j.dump() << "\n";
  }
  return dir / "manifest.jsonl";
}

}  // namespace

TEST_CASE("synth writes ten variants per original") {
  oracle::TempDir dir("cli_synth");
  const auto r = cli({"synth", "--out", (dir.path() / "c").string(), "--originals", "4", "--seed", "1", "--size",
                      "64x64"});
  REQUIRE(r.code == 0);
  CHECK(line_count(dir.path() / "c" / "manifest.jsonl") == 40);
  CHECK(fs::exists(dir.path() / "c" / "corpus_meta.json"));
  const auto samples = ingest::load_manifest(dir.path() / "c" / "manifest.jsonl");
  CHECK(samples.size() == 40);
  CHECK(samples.front().rater_scores.size() == 3);
  CHECK(samples.front().rater_scores.front().scores.size() == 15);
  CHECK(cli({"ingest", "validate", (dir.path() / "c").string()}).code == 0);
}

TEST_CASE("usage errors exit 2 and module errors exit 1") {
  oracle::TempDir dir("cli_errors");
  CHECK(cli({}).code == 2);
  CHECK(cli({"synth", "--out", dir.path().string(), "--bogus"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"synth", "--out", dir.path().string(), "--size", "banana"}).code == 2);
  CHECK(cli({"eval", "--out", dir.path().string()}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  const auto missing = cli({"ingest", "validate", (dir.path() / "nope.jsonl").string()});
  CHECK(missing.code == 1);
  CHECK(!missing.err.empty());
  CHECK(cli({"synth", "--out", dir.path().string(), "--originals", "0"}).code == 1);
  CHECK(cli({"train", "--data", dir.path().string(), "--out", (dir.path() / "r").string(), "--ablate", "no_x"}).code ==
        1);
}

TEST_CASE("eval on predictions equal to the targets") {
  oracle::TempDir dir("cli_eval");
  {
    std::ofstream os(dir.path() / "pred.jsonl");
    for (int i = 0; i < 12; ++i) {
      nlohmann::ordered_json j;
      const double v = 1.0 + 0.3 * i;
      j["predicted"] = {{"overall", v}, {"sharpness", 5.0 - 0.2 * i}};
      j["ground_truth"] = j["predicted"];
      os << j.dump() << "\n";
    }
  }
  const auto r = cli({"eval", "--predictions", (dir.path() / "pred.jsonl").string(), "--logistic"});
  REQUIRE(r.code == 0);
  const auto m = nlohmann::json::parse(slurp(dir.path() / "metrics.json"));
  CHECK(m.at("samples") == 12);
  for (const auto& d : m.at("dimensions")) {
    CHECK(d.at("srcc").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.at("plcc").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(m.at("dimensions")[0].at("dimension") == "overall");
  CHECK(r.out.find("sharpness") != std::string::npos);
  {
    std::ofstream os(dir.path() / "bad.jsonl");
    os << "{\"predicted\":{\"overall\":1}}\n";
  }
  CHECK(cli({"eval", "--predictions", (dir.path() / "bad.jsonl").string()}).code == 1);
}

TEST_CASE("plot-mos on constant scores fills one bin") {
  oracle::TempDir dir("cli_plot");
  const auto manifest = mos_manifest(dir.path(), std::vector<double>(30, 3.0));
  REQUIRE(cli({"plot-mos", manifest.string(), "--out", (dir.path() / "plots").string()}).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir.path() / "plots" / "mos_histograms.json"));
  const auto counts = j.at("dimensions").at("overall").get<std::vector<int>>();
  CHECK(counts.size() == 20);
  CHECK(std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) == 1);
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 30);
  CHECK(j.at("samples") == 30);
  const auto png = read_png_rgb(dir.path() / "plots" / "mos_overall.png");
  CHECK(png.width() > 0);
}

TEST_CASE("plot-mos counts sum to the sample count and empty input fails") {
  oracle::TempDir dir("cli_plot2");
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> mos(200);
  for (double& m : mos) m = u(gen);
  const auto manifest = mos_manifest(dir.path(), mos);
  REQUIRE(cli({"plot-mos", manifest.string(), "--out", (dir.path() / "p").string()}).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir.path() / "p" / "mos_histograms.json"));
  const auto counts = j.at("dimensions").at("overall").get<std::vector<int>>();
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 200);

  std::ofstream(dir.path() / "empty.jsonl").close();
  const auto r = cli({"plot-mos", (dir.path() / "empty.jsonl").string(), "--out", (dir.path() / "q").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no data") != std::string::npos);
}

TEST_CASE("histogram binning") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> v(5000);
  for (double& x : v) x = u(gen);
  const auto counts = app::histogram(v, 1.0, 5.0);
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*lo > 0);
  CHECK(static_cast<double>(*hi) / *lo < 2.0);
  const std::vector<double> edges = {1.0, 5.0, 1.3, 4.99};
  const auto e = app::histogram(edges, 1.0, 5.0);
  CHECK(e.front() == 1);
  CHECK(e[1] == 1);
  CHECK(e.back() == 2);
  const std::vector<double> outside = {5.5};
  CHECK_THROWS_AS(app::histogram(outside, 1.0, 5.0), Error);
}

TEST_CASE("synth, train, eval chain is reproducible") {
  oracle::TempDir dir("cli_chain");
  std::vector<std::string> manifests, metrics, logs;
  for (const char* tag : {"a", "b"}) {
    const auto root = dir.path() / tag;
    REQUIRE(cli({"synth", "--out", (root / "corpus").string(), "--originals", "4", "--seed", "7"}).code == 0);
    const auto t = cli({"train", "--data", (root / "corpus").string(), "--out", (root / "run").string(), "--desk",
                        "--seed", "7", "--epochs", "1"});
    REQUIRE(t.code == 0);
    REQUIRE(cli({"eval", "--run", (root / "run").string(), "--out", (root / "eval").string()}).code == 0);
    manifests.push_back(slurp(root / "corpus" / "manifest.jsonl"));
    metrics.push_back(slurp(root / "eval" / "metrics.json"));
    logs.push_back(slurp(root / "run" / "train_log.jsonl"));
    CHECK(fs::exists(root / "run" / "model.ckpt"));
    CHECK(fs::exists(root / "run" / "report.json"));
    CHECK(fs::exists(root / "run" / "config.txt"));
  }
  CHECK(manifests[0] == manifests[1]);
  CHECK(metrics[0] == metrics[1]);
  CHECK(logs[0] == logs[1]);
  CHECK(metrics[0] == slurp(dir.path() / "a" / "run" / "metrics.json"));

  const auto corpus = dir.path() / "a" / "corpus";
  const auto score = cli({"score", "--ckpt", (dir.path() / "a" / "run" / "model.ckpt").string(), "--image",
                          (corpus / "images" / "doc0000_v0.png").string(), "--mask",
                          (corpus / "masks" / "doc0000.png").string()});
  REQUIRE(score.code == 0);
  const auto s = nlohmann::json::parse(score.out);
  CHECK(s.size() == 3);
  CHECK(s.at("overall").is_number());

  const auto run_cfg = dir.path() / "cfg.txt";
  std::ofstream(run_cfg) << "# short\nepochs = 1\nmax_steps = 1\nheight = 128\nwidth = 128\n";
  const auto t = cli({"train", "--data", corpus.string(), "--out", (dir.path() / "small").string(), "--desk",
                      "--config", run_cfg.string(), "--ablate", "no_fusion"});
  REQUIRE(t.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir.path() / "small" / "report.json"));
  CHECK(report.at("steps") == 1);
  CHECK(report.at("ablations") == "no_fusion");
  CHECK(report.at("model").at("height") == 128);
}

TEST_CASE("ingest screen rewrites a loadable manifest") {
  oracle::TempDir dir("cli_screen");
  const auto corpus = dir.path() / "c";
  REQUIRE(cli({"synth", "--out", corpus.string(), "--originals", "3", "--seed", "2", "--size", "64x64"}).code == 0);
  const auto dest = dir.path() / "screened" / "manifest.jsonl";
  const auto r = cli({"ingest", "screen", corpus.string(), "--out", dest.string()});
  REQUIRE(r.code == 0);
  const auto screened = ingest::load_manifest(dest);
  CHECK(screened.size() == 30);
  CHECK(fs::exists(dest.parent_path() / "corpus_meta.json"));
  CHECK(fs::exists(dest.string() + ".screening.json"));
}
