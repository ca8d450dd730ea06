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

#ifndef SYNTAXPROBE_PROBE_H_
#define SYNTAXPROBE_PROBE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "syntaxprobe/deplabel.h"
#include "syntaxprobe/pooling.h"

namespace syntaxprobe {

// Linear softmax classifier p(y|x) = softmax(W x + b).
struct ProbeModel {
  Eigen::MatrixXd W;  // K x D
  Eigen::VectorXd b;  // K
  LabelVocab vocab;

  std::size_t classes() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(W.cols()); }
  static ProbeModel Zeros(const LabelVocab& vocab, std::size_t dim);
};

// Row-wise softmax(X W^T + b), computed with max subtraction.
Eigen::MatrixXd Forward(const ProbeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

// Mean of -log p[r, y_r]. Throws std::out_of_range for a class id outside
// [0, K).
double NllLoss(const Eigen::Ref<const Eigen::MatrixXd>& probs, std::span<const int> y);

struct Gradients {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

// With P = Forward(model, X) and R = P - onehot(y):
//   dW = R^T X / N,  db = colsum(R) / N.
Gradients ComputeGradients(const ProbeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           std::span<const int> y);

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Lookahead Nesterov update:
//   g = grad(theta + momentum * v);  v = momentum * v - lr * g;  theta += v.
// Throws NumericError if g has a non-finite entry.
void SgdNesterovStep(Eigen::VectorXd& params, Eigen::VectorXd& velocity,
                     const GradientFn& grad_fn, double learning_rate, double momentum);

struct TrainConfig {
  double learning_rate = 0.005;
  double momentum = 0.99;
  bool nesterov = true;
  std::size_t batch_size = 1024;
  int patience_epochs = 10;
  double min_delta = 0.0001;
  int max_epochs = 1000;
  std::uint64_t seed = 0;

  // Learning rate 0.005 for POS, 0.001 for dependency labels.
  static TrainConfig ForTask(Task task);
  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0.0;  // mean mini-batch NLL, evaluated at the gradient point
  double dev_accuracy = 0.0;
};

struct TrainState {
  Eigen::VectorXd velocity;  // flattened as [vec(W) column-major; b]
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::vector<EpochRecord> log;
};

struct TrainResult {
  ProbeModel model;  // snapshot from the best dev-accuracy epoch
  TrainState state;
};

// Dev accuracy of the current parameters after `epoch` (1-based).
using DevEvaluator = std::function<double(const ProbeModel& model, int epoch)>;

// Zero-initialized mini-batch training with per-epoch reshuffling seeded by
// (seed, epoch). Stops once `patience_epochs` consecutive epochs fail to beat
// the best dev accuracy by more than `min_delta`, or at `max_epochs`.
TrainResult Train(const ProbeDataset& train, const ProbeDataset& dev, const TrainConfig& config);
TrainResult TrainWithEvaluator(const ProbeDataset& train, const TrainConfig& config,
                               const DevEvaluator& dev_accuracy);

// Argmax of Forward per row, ties to the lowest class id.
std::vector<int> Predict(const ProbeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);
// Same on float features, processed in chunks.
std::vector<int> PredictFeatures(const ProbeModel& model, const FrameMatrix& X);

// Checkpoint binary (little-endian): "SPM1", u32 version, u32 K, u32 D,
// f64 W[K][D] row-major, f64 b[K]. The JSON sidecar `<path>.json` carries
// vocab, config, best epoch, and dev accuracy.
inline constexpr char kModelMagic[4] = {'S', 'P', 'M', '1'};
void SaveModel(const std::filesystem::path& path, const ProbeModel& model,
               const TrainConfig& config, const TrainState& state);
ProbeModel LoadModel(const std::filesystem::path& path);

// CSV with header `epoch,train_nll,dev_accuracy`.
std::string EpochLogCsv(const std::vector<EpochRecord>& log);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_PROBE_H_
