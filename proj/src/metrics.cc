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

#include "syntaxprobe/metrics.h"

#include <stdexcept>

#include "syntaxprobe/util.h"

namespace syntaxprobe {
namespace {

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b)
    throw std::invalid_argument("length mismatch: " + std::to_string(a) + " predictions vs " +
                                std::to_string(b) + " gold labels");
}

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double Accuracy(std::span<const int> pred, std::span<const int> gold, std::span<const char> oov) {
  CheckLengths(pred.size(), gold.size());
  if (!oov.empty()) CheckLengths(oov.size(), gold.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool is_oov = !oov.empty() && oov[i];
    if (!is_oov && pred[i] == gold[i]) ++correct;
  }
  return Ratio(correct, gold.size());
}

std::vector<LabelScore> PerLabelPrf(std::span<const int> pred, std::span<const int> gold,
                                    const LabelVocab& vocab) {
  CheckLengths(pred.size(), gold.size());
  const std::size_t K = vocab.size();
  std::vector<LabelScore> scores(K);
  for (std::size_t k = 0; k < K; ++k) scores[k].label = vocab.label(static_cast<int>(k));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i];
    const int p = pred[i];
    if (p >= 0 && static_cast<std::size_t>(p) < K) ++scores[p].predicted;
    if (g < 0 || static_cast<std::size_t>(g) >= K) continue;
    ++scores[g].support;
    if (p == g) ++scores[g].true_positives;
  }
  for (LabelScore& s : scores) {
    s.precision = Ratio(s.true_positives, s.predicted);
    s.recall = Ratio(s.true_positives, s.support);
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  }
  return scores;
}

EvalReport Evaluate(std::span<const int> pred, std::span<const int> gold,
                    std::span<const char> oov, const LabelVocab& vocab) {
  CheckLengths(pred.size(), gold.size());
  if (!oov.empty()) CheckLengths(oov.size(), gold.size());
  EvalReport r;
  r.n_items = gold.size();
  r.accuracy = Accuracy(pred, gold, oov);
  std::vector<int> masked(gold.begin(), gold.end());
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if ((!oov.empty() && oov[i]) || masked[i] == kOovId) {
      masked[i] = kOovId;
      ++r.oov_errors;
    }
  }
  r.per_label = PerLabelPrf(pred, masked, vocab);
  if (r.oov_errors > 0) {
    LabelScore o;
    o.label = "OOV";
    o.support = r.oov_errors;
    r.per_label.push_back(o);
  }
  return r;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const LabelScore& s : per_label)
    rows.push_back({{"label", s.label},
                    {"precision", s.precision},
                    {"recall", s.recall},
                    {"f1", s.f1},
                    {"support", s.support},
                    {"predicted", s.predicted}});
  return {{"accuracy", accuracy}, {"n_items", n_items}, {"oov_errors", oov_errors},
          {"per_label", rows}};
}

EvalReport EvalReport::FromJson(const nlohmann::json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.n_items = j.at("n_items").get<std::size_t>();
  r.oov_errors = j.at("oov_errors").get<std::size_t>();
  for (const auto& row : j.at("per_label")) {
    LabelScore s;
    s.label = row.at("label").get<std::string>();
    s.precision = row.at("precision").get<double>();
    s.recall = row.at("recall").get<double>();
    s.f1 = row.at("f1").get<double>();
    s.support = row.at("support").get<std::size_t>();
    s.predicted = row.value("predicted", std::size_t{0});
    s.true_positives = static_cast<std::size_t>(s.recall * static_cast<double>(s.support) + 0.5);
    r.per_label.push_back(s);
  }
  return r;
}

std::string EvalReport::PerLabelCsv() const {
  std::string out = "label,precision,recall,f1,support\n";
  for (const LabelScore& s : per_label) {
    if (s.support == 0) continue;
    out += s.label + "," + FormatDecimals(s.precision, 6) + "," + FormatDecimals(s.recall, 6) +
           "," + FormatDecimals(s.f1, 6) + "," + std::to_string(s.support) + "\n";
  }
  return out;
}

double AttachmentScore(std::span<const int> pred_heads, std::span<const int> gold_heads) {
  CheckLengths(pred_heads.size(), gold_heads.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold_heads.size(); ++i)
    if (pred_heads[i] == gold_heads[i]) ++correct;
  return Ratio(correct, gold_heads.size());
}

}  // namespace syntaxprobe
