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

#ifndef SYNTAXPROBE_TESTS_SUPPORT_SYNTHETIC_H_
#define SYNTAXPROBE_TESTS_SUPPORT_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "syntaxprobe/pooling.h"
#include "syntaxprobe/treebank.h"

namespace syntaxprobe::testing {

// Uniformly drawn root, then each token in a random order attaches to one
// already placed. Always a valid tree over 1..n.
std::vector<int> RandomTree(std::size_t n, std::mt19937_64& rng);

struct SyntheticConfig {
  std::size_t utterances = 500;
  std::uint32_t layers = 3;
  std::uint32_t dim = 32;
  std::uint32_t informative_layer = 1;
  Task signal_task = Task::kPos;
  std::vector<std::string> tags = {"NOM", "VRB", "DET", "PRO", "ADV"};
  std::vector<double> tag_weights = {0.40, 0.22, 0.16, 0.12, 0.10};
  int min_tokens = 3;
  int max_tokens = 10;
  double hop_s = 0.020;
  double window_s = 0.025;
  double centroid_scale = 3.0;
  double frame_noise = 1.0;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::filesystem::path treebank_path;
  std::filesystem::path manifest_path;
  Treebank treebank;
  std::string majority_label;
  double majority_rate = 0.0;  // over every generated label of signal_task
};

// Writes treebank.conllu, manifest.json and features/ under `dir`. Frames of
// the informative layer are centroid(label) + noise within each token span;
// every other layer (and every frame outside tokens) is pure noise.
SyntheticCorpus WriteSyntheticCorpus(const SyntheticConfig& config,
                                     const std::filesystem::path& dir);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "syntaxprobe");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace syntaxprobe::testing

#endif  // SYNTAXPROBE_TESTS_SUPPORT_SYNTHETIC_H_
