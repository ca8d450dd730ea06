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

#ifndef SYNTAXPROBE_METRICS_H_
#define SYNTAXPROBE_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntaxprobe/deplabel.h"

namespace syntaxprobe {

// Fraction of positions with pred == gold. Positions flagged in `oov` count
// as wrong whatever the prediction. An empty `oov` means none is flagged.
// Values are compared as plain integers, so raw relative labels work too.
double Accuracy(std::span<const int> pred, std::span<const int> gold,
                std::span<const char> oov = {});

struct LabelScore {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  std::size_t true_positives = 0;
};

// Scores for every vocabulary label, in class-id order. Zero denominators
// give 0. Gold positions with kOovId are skipped here (see EvalReport).
std::vector<LabelScore> PerLabelPrf(std::span<const int> pred, std::span<const int> gold,
                                    const LabelVocab& vocab);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<LabelScore> per_label;  // vocab labels, then an "OOV" row when oov_errors > 0
  std::size_t n_items = 0;
  std::size_t oov_errors = 0;

  nlohmann::json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
  // Rows `label,precision,recall,f1,support` for labels with support > 0.
  std::string PerLabelCsv() const;
};

EvalReport Evaluate(std::span<const int> pred, std::span<const int> gold,
                    std::span<const char> oov, const LabelVocab& vocab);

// Fraction of tokens whose head matches.
double AttachmentScore(std::span<const int> pred_heads, std::span<const int> gold_heads);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_METRICS_H_
