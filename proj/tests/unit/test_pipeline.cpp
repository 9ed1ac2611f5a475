// Copyright 2026  The pqr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pqr/pipeline.hpp"

using namespace pqr;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pqr_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small fixtures and a budget that runs in seconds.
PipelineConfig tiny_config(const std::string& dir) {
  FixtureSpec fx;
  fx.n_molecules = 80;
  fx.n_complexes = 20;
  fx.n_shift = 10;
  fx.n_planted3d = 4;
  fx.seed = 3;
  write_fixtures(dir, fx);
  auto cfg = PipelineConfig::load(dir + "/pipeline.json");
  cfg.d = 8;
  cfg.train_2d.max_epochs = 2;
  cfg.recalibrate.max_epochs = 1;
  cfg.train_3d.max_epochs = 1;
  cfg.eval.kernel_contexts = 20;
  cfg.eval.test_fraction = 0.4;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto dir = scratch("config");
  std::ofstream(dir + "/c.smi") << "CCO\n";
  std::ofstream(dir + "/x.jsonl") << "";
  const json j{{"corpus", "c.smi"}, {"complexes", "x.jsonl"}, {"seed", 5}, {"d", 16}, {"train_2d", {{"max_epochs", 3}}}};
  const auto c = PipelineConfig::from_json(j, dir);
  CHECK(c.corpus == (fs::path(dir) / "c.smi").string());
  CHECK(c.d == 16);
  CHECK(c.train_2d.max_epochs == 3);
  CHECK(c.recalibrate.max_epochs == 10);
  CHECK_NOTHROW(c.validate());
  CHECK(c.train_2d.seed == derive_seed(5, 2));
  CHECK(c.noise.seed == derive_seed(5, 4));

  SUBCASE("unknown keys and misplaced seeds") {
    json bad = j;
    bad["learning_rate"] = 1;
    CHECK_THROWS_AS(PipelineConfig::from_json(bad, dir), Error);
    json bad2 = j;
    bad2["train_3d"] = {{"seed", 1}};
    CHECK_THROWS_AS(PipelineConfig::from_json(bad2, dir), Error);
    json bad3 = j;
    bad3["eval"] = {{"k", 1}};
    CHECK_THROWS_AS(PipelineConfig::from_json(bad3, dir), Error);
  }
  SUBCASE("hash covers results only") {
    auto d = c;
    d.out = "elsewhere";
    d.apply_overrides(std::nullopt, 4);
    CHECK(d.hash() == c.hash());
    CHECK(d.train_3d.workers == 4);
    d.apply_overrides(6, std::nullopt);
    CHECK(d.hash() != c.hash());
    CHECK(PipelineConfig::from_json(c.to_json(), "/").hash() == c.hash());
  }
  SUBCASE("validation") {
    auto d = c;
    d.corpus = dir + "/missing.smi";
    CHECK_THROWS_AS(d.validate(), Error);
    d = c;
    d.eval.test_fraction = 1.0;
    CHECK_THROWS_AS(d.validate(), Error);
  }
}

TEST_CASE("artifacts") {
  const auto dir = scratch("artifacts");
  const auto p = dir + "/a.json";
  write_artifact(p, "thing", "abc", {{"x", "1"}}, {{"v", 2}});
  const auto j = read_artifact(p, "thing");
  CHECK(j["config_hash"] == "abc");
  CHECK(j["payload"]["v"] == 2);
  CHECK_THROWS_AS(read_artifact(p, "other"), FingerprintError);
  CHECK_THROWS_AS(read_artifact(dir + "/none.json", "thing"), FingerprintError);
  CHECK(file_fingerprint(p) == file_fingerprint(p));
  std::ofstream(p, std::ios::app) << " ";
  CHECK(file_fingerprint(p) != to_hex(fnv1a(std::string())));
}

TEST_CASE("stage order is enforced by fingerprints") {
  const auto dir = scratch("order");
  auto cfg = tiny_config(dir);
  cfg.out = dir + "/run";
  Pipeline p(cfg);
  CHECK_THROWS_AS(p.train_2d(), FingerprintError);
  p.build_vocab();
  CHECK(p.load_split(true).size() + p.load_split(false).size() == 20);
  CHECK_FALSE(p.load_split(true).empty());
  p.train_2d();
  CHECK_THROWS_AS(p.train_3d(), FingerprintError);
  CHECK_THROWS_AS(p.train_3d(p.path("model2d.json")), FingerprintError);
  CHECK_THROWS_AS(p.evaluate(), FingerprintError);
  p.recalibrate();
  CHECK_NOTHROW(p.load_model2d(true));

  SUBCASE("stale inputs") {
    auto j = json::parse(slurp(p.path("vocab_b.json")));
    j["payload"]["vocabulary"]["entries"][0]["count"] = 999;
    std::ofstream(p.path("vocab_b.json")) << j.dump(1) << "\n";
    CHECK_THROWS_AS(p.load_model2d(true), FingerprintError);
  }
  SUBCASE("shred policy change") {
    auto c2 = cfg;
    c2.shred.max_radius = 1;
    Pipeline q(c2);
    CHECK_THROWS_AS(q.load_vocab("a"), FingerprintError);
  }
}

TEST_CASE("end-to-end run is bitwise reproducible") {
  const auto dir = scratch("e2e");
  auto cfg = tiny_config(dir);
  cfg.out = dir + "/run1";
  const auto s1 = Pipeline(cfg).run_all();
  auto cfg2 = cfg;
  cfg2.out = dir + "/run2";
  cfg2.apply_overrides(std::nullopt, 2);
  const auto s2 = Pipeline(cfg2).run_all();
  CHECK(s1 == s2);

  int n_roc = 0;
  for (const char* m : {"1D", "2D", "3D"})
    for (const char* b : {"0D", "1D", "2D"}) {
      const std::string name = std::string("roc_") + m + "_over_" + b;
      n_roc += fs::exists(cfg.out + "/eval/" + name + ".json") && fs::exists(cfg.out + "/eval/" + name + ".csv");
    }
  CHECK(n_roc == 9);
  CHECK(s1["auc"]["2D_over_2D"]["auc"] == 0.5);
  CHECK(fs::exists(cfg.out + "/entropy_shift.csv"));
  CHECK(fs::exists(cfg.out + "/distance.csv"));

  std::size_t n_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(cfg.out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), cfg.out);
    CHECK_MESSAGE(slurp(e.path()) == slurp(fs::path(cfg2.out) / rel), rel.string());
    ++n_files;
  }
  CHECK(n_files > 20);
  CHECK(auc_table(s1).find("3D") != std::string::npos);
}
