// Copyright 2026 The syntaxprobe Authors.
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "support/synthetic.h"
#include "syntaxprobe/runner.h"
#include "syntaxprobe/util.h"

using namespace syntaxprobe;
namespace fs = std::filesystem;

namespace {

SweepConfig BaseConfig(const testing::SyntheticCorpus& corpus, const fs::path& out) {
  SweepConfig cfg;
  cfg.task = Task::kPos;
  cfg.train = TrainConfig::ForTask(Task::kPos);
  cfg.treebank_path = corpus.treebank_path;
  cfg.manifest_path = corpus.manifest_path;
  cfg.output_dir = out;
  cfg.split.seed = 3;
  return cfg;
}

LayerReport Fake(const std::string& source, int layer, double dev, double test) {
  LayerReport r;
  r.source = source;
  r.layer = layer;
  r.ok = true;
  r.dev.accuracy = dev;
  r.test.accuracy = test;
  return r;
}

}  // namespace

TEST_CASE("sweep separates the informative layer from noise") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 160;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "corpus");
  SweepConfig cfg = BaseConfig(corpus, dir.path() / "out");
  SweepResult r = RunLayerSweep(cfg);
  REQUIRE(r.reports.size() == 3);
  for (const LayerReport& rep : r.reports) {
    INFO("layer " << rep.layer << " err " << rep.error);
    REQUIRE(rep.ok);
  }
  CHECK(r.reports[1].test.accuracy >= 0.95);
  CHECK(r.best_layers.at(kPretrainedSource) == 1);
  CHECK(fs::exists(cfg.output_dir / "summary.csv"));
  CHECK(fs::exists(cfg.output_dir / "pretrained" / "layer_1.json"));
  CHECK(fs::exists(cfg.output_dir / "pretrained" / "layer_1_epochs.csv"));
  CHECK(fs::exists(cfg.output_dir / "pretrained" / "layer_1.spm"));
  CHECK(fs::exists(cfg.output_dir / "pretrained_best_per_label.csv"));
  CHECK(fs::exists(cfg.output_dir / "filter_log.jsonl"));
}

TEST_CASE("baseline features go through the same path") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 120;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "pre");
  sc.informative_layer = 99;  // same treebank, noise everywhere
  testing::SyntheticCorpus noise = testing::WriteSyntheticCorpus(sc, dir.path() / "rand");
  REQUIRE(ReadFile(corpus.treebank_path) == ReadFile(noise.treebank_path));

  SweepConfig cfg = BaseConfig(corpus, dir.path() / "out");
  cfg.baseline_manifest = noise.manifest_path;
  cfg.layers = std::vector<std::uint32_t>{1, 2};
  SweepResult r = RunLayerSweep(cfg);
  REQUIRE(r.reports.size() == 4);
  CHECK(r.reports[0].source == kPretrainedSource);
  CHECK(r.reports[2].source == kBaselineSource);
  CHECK(r.reports[2].layer == 1);
  CHECK(r.reports[0].test.accuracy > r.reports[2].test.accuracy + 0.3);
  const std::string summary = ReadFile(cfg.output_dir / "summary.csv");
  CHECK(summary.rfind("source,layer,task,dev_acc,test_acc\n", 0) == 0);
  CHECK(summary.find("\nbaseline,1,pos,") != std::string::npos);
  CHECK(fs::exists(cfg.output_dir / "baseline_best_per_label.csv"));
}

TEST_CASE("a corrupt layer fails alone") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 80;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "c");
  // Rewrite one file with two layers while the manifest still claims three.
  FeatureStore store(corpus.manifest_path);
  const std::string id = corpus.treebank.utterances[5].id;
  const ManifestEntry& e = store.entry(id);
  FeatureTensor full = ReadFeatureFile(store.ResolvePath(e));
  FeatureTensor cut(2, full.frames, full.dim);
  std::copy(full.data.begin(), full.data.begin() + cut.data.size(), cut.data.begin());
  WriteFeatureFile(store.ResolvePath(e), cut);

  SweepConfig cfg = BaseConfig(corpus, dir.path() / "out");
  SweepResult r = RunLayerSweep(cfg);
  REQUIRE(r.reports.size() == 3);
  CHECK(r.reports[0].ok);
  CHECK(r.reports[1].ok);
  CHECK_FALSE(r.reports[2].ok);
  CHECK(r.reports[2].error.find("out of range") != std::string::npos);
  const std::string summary = ReadFile(cfg.output_dir / "summary.csv");
  CHECK(summary.find("pretrained,2,") == std::string::npos);
  CHECK(ReadFile(cfg.output_dir / "pretrained" / "layer_2.json").find("\"ok\": false") !=
        std::string::npos);
}

TEST_CASE("sweep configuration errors") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 30;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "c");
  SweepConfig cfg = BaseConfig(corpus, dir.path() / "out");
  cfg.layers = std::vector<std::uint32_t>{};
  CHECK_THROWS_AS(RunLayerSweep(cfg), std::invalid_argument);
  cfg.layers = std::vector<std::uint32_t>{3};
  CHECK_THROWS_AS(RunLayerSweep(cfg), std::invalid_argument);
  cfg.layers.reset();
  cfg.manifest_path = dir.path() / "missing.json";
  CHECK_THROWS_AS(RunLayerSweep(cfg), DataError);
}

TEST_CASE("sweeps are reproducible, also with parallel layers") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 100;
  sc.signal_task = Task::kDep;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "c");
  SweepConfig cfg = BaseConfig(corpus, dir.path() / "a");
  cfg.task = Task::kDep;
  cfg.train = TrainConfig::ForTask(Task::kDep);
  RunLayerSweep(cfg);
  cfg.output_dir = dir.path() / "b";
  cfg.jobs = 3;
  cfg.pooling.cache_dir = dir.path() / "cache";
  RunLayerSweep(cfg);
  cfg.output_dir = dir.path() / "c2";
  RunLayerSweep(cfg);  // served from the cache
  const std::string a = ReadFile(dir.path() / "a" / "summary.csv");
  CHECK(a == ReadFile(dir.path() / "b" / "summary.csv"));
  CHECK(a == ReadFile(dir.path() / "c2" / "summary.csv"));
  CHECK(a.find(",dep,") != std::string::npos);
}

TEST_CASE("best layer selection and report emission") {
  std::vector<LayerReport> reports = {Fake(kPretrainedSource, 0, 0.50, 0.4),
                                      Fake(kPretrainedSource, 1, 0.52, 0.3)};
  CHECK(SelectBestLayer(reports, kPretrainedSource) == 1);
  reports.push_back(Fake(kPretrainedSource, 2, 0.52, 0.9));
  CHECK(SelectBestLayer(reports, kPretrainedSource) == 1);
  reports.insert(reports.begin(), Fake(kPretrainedSource, 3, 0.52, 0.1));
  CHECK(SelectBestLayer(reports, kPretrainedSource) == 1);
  CHECK(SelectBestLayer(reports, kBaselineSource) == -1);
  CHECK_THROWS_AS(EmitReport({}, "unused"), std::invalid_argument);

  testing::TempDir dir;
  LayerReport failed = Fake(kBaselineSource, 0, 0, 0);
  failed.ok = false;
  failed.error = "boom";
  reports.push_back(failed);
  std::map<std::string, int> best = EmitReport(reports, dir.path());
  CHECK(best.at(kPretrainedSource) == 1);
  CHECK(best.at(kBaselineSource) == -1);
  std::vector<LayerReport> back = LoadLayerReports(dir.path());
  REQUIRE(back.size() == 5);
  CHECK(back[0].layer == 0);
  CHECK(back[3].layer == 3);
  CHECK(back[4].source == kBaselineSource);
  CHECK(back[4].error == "boom");
  CHECK(SummaryCsv(back) != SummaryCsv(reports));  // reloaded in layer order
  CHECK(ReadFile(dir.path() / "summary.csv") == SummaryCsv(reports));
}

TEST_CASE("per-label rows of the best layer sum to the test size") {
  testing::TempDir dir;
  testing::SyntheticConfig sc;
  sc.utterances = 100;
  sc.signal_task = Task::kDep;
  testing::SyntheticCorpus corpus = testing::WriteSyntheticCorpus(sc, dir.path() / "c");
  SweepConfig cfg = BaseConfig(corpus, dir.path() / "out");
  cfg.task = Task::kDep;
  cfg.train = TrainConfig::ForTask(Task::kDep);
  SweepResult r = RunLayerSweep(cfg);
  const int best = r.best_layers.at(kPretrainedSource);
  REQUIRE(best >= 0);
  std::ifstream in(cfg.output_dir / "pretrained_best_per_label.csv");
  std::string line;
  std::getline(in, line);
  std::size_t total = 0;
  while (std::getline(in, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  CHECK(total == r.reports[best].test.n_items);
}

TEST_CASE("cache dir override") {
  ::setenv("SYNTAXPROBE_CACHE_DIR", "/tmp/spcache", 1);
  CHECK(ResolveCacheDir("x") == fs::path("/tmp/spcache"));
  ::unsetenv("SYNTAXPROBE_CACHE_DIR");
  CHECK(ResolveCacheDir("x") == fs::path("x"));
}
