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

#include "syntaxprobe/probe.h"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "syntaxprobe/metrics.h"
#include "syntaxprobe/util.h"

namespace syntaxprobe {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void CheckDims(const ProbeModel& model, Index cols) {
  if (static_cast<std::size_t>(cols) != model.dim())
    throw std::invalid_argument("feature dim " + std::to_string(cols) +
                                " does not match probe dim " + std::to_string(model.dim()));
}

MatrixXd Logits(const Eigen::Ref<const MatrixXd>& W, const Eigen::Ref<const VectorXd>& b,
                const Eigen::Ref<const MatrixXd>& X) {
  MatrixXd z = X * W.transpose();
  z.rowwise() += b.transpose();
  return z;
}

// In-place row softmax of logits.
void SoftmaxRows(MatrixXd& z) {
  for (Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - m).exp();
    z.row(r) /= z.row(r).sum();
  }
}

// Mean NLL computed from logits by log-sum-exp, and R = P - onehot(y)
// written over `z`.
double LossAndResidual(MatrixXd& z, std::span<const int> y) {
  double loss = 0.0;
  for (Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    loss += lse - z(r, y[r]);
  }
  SoftmaxRows(z);
  for (Index r = 0; r < z.rows(); ++r) z(r, y[r]) -= 1.0;
  return loss / static_cast<double>(z.rows());
}

void CheckLabels(std::span<const int> y, Index rows, Index classes) {
  if (static_cast<Index>(y.size()) != rows)
    throw std::invalid_argument("label count does not match row count");
  for (int c : y)
    if (c < 0 || c >= classes)
      throw std::out_of_range("class id " + std::to_string(c) + " outside [0," +
                              std::to_string(classes) + ")");
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutF64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t GetLE(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

ProbeModel ProbeModel::Zeros(const LabelVocab& vocab, std::size_t dim) {
  ProbeModel m;
  m.W = MatrixXd::Zero(static_cast<Index>(vocab.size()), static_cast<Index>(dim));
  m.b = VectorXd::Zero(static_cast<Index>(vocab.size()));
  m.vocab = vocab;
  return m;
}

MatrixXd Forward(const ProbeModel& model, const Eigen::Ref<const MatrixXd>& X) {
  CheckDims(model, X.cols());
  MatrixXd z = Logits(model.W, model.b, X);
  SoftmaxRows(z);
  return z;
}

double NllLoss(const Eigen::Ref<const MatrixXd>& probs, std::span<const int> y) {
  CheckLabels(y, probs.rows(), probs.cols());
  if (probs.rows() == 0) return 0.0;
  double loss = 0.0;
  for (Index r = 0; r < probs.rows(); ++r) loss -= std::log(probs(r, y[r]));
  return loss / static_cast<double>(probs.rows());
}

Gradients ComputeGradients(const ProbeModel& model, const Eigen::Ref<const MatrixXd>& X,
                           std::span<const int> y) {
  CheckDims(model, X.cols());
  CheckLabels(y, X.rows(), model.W.rows());
  if (X.rows() == 0) throw std::invalid_argument("ComputeGradients: empty batch");
  MatrixXd r = Forward(model, X);
  for (Index i = 0; i < r.rows(); ++i) r(i, y[i]) -= 1.0;
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  Gradients g;
  g.dW = (r.transpose() * X) * inv_n;
  g.db = r.colwise().sum().transpose() * inv_n;
  return g;
}

void SgdNesterovStep(VectorXd& params, VectorXd& velocity, const GradientFn& grad_fn,
                     double learning_rate, double momentum) {
  if (params.size() != velocity.size())
    throw std::invalid_argument("SgdNesterovStep: params/velocity size mismatch");
  VectorXd lookahead = params + momentum * velocity;
  VectorXd g = grad_fn(lookahead);
  if (g.size() != params.size())
    throw std::invalid_argument("SgdNesterovStep: gradient size mismatch");
  if (!g.allFinite()) {
    Index bad = 0;
    for (; bad < g.size() && std::isfinite(g[bad]); ++bad) {
    }
    std::ostringstream msg;
    msg << "non-finite gradient at coordinate " << bad << " (value " << g[bad]
        << "), |theta|=" << params.norm() << " |v|=" << velocity.norm() << " lr=" << learning_rate;
    throw NumericError(msg.str());
  }
  velocity = momentum * velocity - learning_rate * g;
  params += velocity;
}

TrainConfig TrainConfig::ForTask(Task task) {
  TrainConfig c;
  c.learning_rate = task == Task::kPos ? 0.005 : 0.001;
  return c;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (patience_epochs < 1) throw std::invalid_argument("patience_epochs must be positive");
  if (!(min_delta >= 0.0)) throw std::invalid_argument("min_delta must be non-negative");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
}

TrainResult TrainWithEvaluator(const ProbeDataset& train, const TrainConfig& config,
                               const DevEvaluator& dev_accuracy) {
  config.Validate();
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  if (train.vocab.size() == 0) throw std::invalid_argument("empty label vocabulary");
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.oov[i] || train.y[i] == kOovId)
      throw std::invalid_argument("training rows must not carry OOV labels");

  const Index K = static_cast<Index>(train.vocab.size());
  const Index D = train.X.cols();
  const Index n_w = K * D;
  const std::size_t N = train.size();

  ProbeModel current = ProbeModel::Zeros(train.vocab, static_cast<std::size_t>(D));
  VectorXd theta = VectorXd::Zero(n_w + K);
  TrainState state;
  state.velocity = VectorXd::Zero(n_w + K);

  TrainResult result;
  result.model = current;
  double best = -std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  MatrixXd batch_x;
  std::vector<int> batch_y;
  double epoch_loss = 0.0;
  GradientFn grad = [&](const VectorXd& at) -> VectorXd {
    Eigen::Map<const MatrixXd> W(at.data(), K, D);
    Eigen::Map<const VectorXd> b(at.data() + n_w, K);
    MatrixXd z = Logits(W, b, batch_x);
    const double loss = LossAndResidual(z, batch_y);
    epoch_loss += loss * static_cast<double>(batch_y.size());
    const double inv_n = 1.0 / static_cast<double>(batch_y.size());
    VectorXd g(n_w + K);
    Eigen::Map<MatrixXd>(g.data(), K, D) = (z.transpose() * batch_x) * inv_n;
    g.tail(K) = z.colwise().sum().transpose() * inv_n;
    return g;
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::mt19937_64 rng = MakeRng(config.seed, static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order = SeededPermutation(N, rng);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < N; start += config.batch_size) {
      const std::size_t stop = std::min(N, start + config.batch_size);
      const Index rows = static_cast<Index>(stop - start);
      batch_x.resize(rows, D);
      batch_y.resize(rows);
      for (Index r = 0; r < rows; ++r) {
        const std::size_t src = order[start + static_cast<std::size_t>(r)];
        batch_x.row(r) = train.X.row(static_cast<Index>(src)).cast<double>();
        batch_y[r] = train.y[src];
      }
      if (config.nesterov) {
        SgdNesterovStep(theta, state.velocity, grad, config.learning_rate, config.momentum);
      } else {
        VectorXd g = grad(theta);
        if (!g.allFinite()) throw NumericError("non-finite gradient in epoch " + std::to_string(epoch));
        state.velocity = config.momentum * state.velocity - config.learning_rate * g;
        theta += state.velocity;
      }
    }

    current.W = Eigen::Map<const MatrixXd>(theta.data(), K, D);
    current.b = theta.tail(K);
    const double acc = dev_accuracy(current, epoch);
    state.epochs_run = epoch;
    state.log.push_back({epoch, epoch_loss / static_cast<double>(N), acc});

    const bool significant = acc > best + config.min_delta;
    if (acc > best) {
      best = acc;
      state.best_epoch = epoch;
      state.best_val_accuracy = acc;
      result.model = current;
    }
    since_improvement = significant ? 0 : since_improvement + 1;
    if (since_improvement >= config.patience_epochs) break;
  }
  result.state = std::move(state);
  return result;
}

TrainResult Train(const ProbeDataset& train, const ProbeDataset& dev, const TrainConfig& config) {
  if (dev.size() == 0) throw std::invalid_argument("empty dev set");
  if (!(train.vocab == dev.vocab)) throw std::invalid_argument("train/dev vocab mismatch");
  if (train.dim() != dev.dim()) throw std::invalid_argument("train/dev feature dim mismatch");
  return TrainWithEvaluator(train, config, [&](const ProbeModel& m, int) {
    return Accuracy(PredictFeatures(m, dev.X), dev.y, dev.oov);
  });
}

std::vector<int> Predict(const ProbeModel& model, const Eigen::Ref<const MatrixXd>& X) {
  MatrixXd p = Forward(model, X);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Index r = 0; r < p.rows(); ++r) {
    Index best = 0;
    for (Index k = 1; k < p.cols(); ++k)
      if (p(r, k) > p(r, best)) best = k;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> PredictFeatures(const ProbeModel& model, const FrameMatrix& X) {
  constexpr Index kChunk = 4096;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Index start = 0; start < X.rows(); start += kChunk) {
    const Index rows = std::min(kChunk, X.rows() - start);
    MatrixXd chunk = X.middleRows(start, rows).cast<double>();
    std::vector<int> part = Predict(model, chunk);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void SaveModel(const std::filesystem::path& path, const ProbeModel& model,
               const TrainConfig& config, const TrainState& state) {
  std::string bytes(kModelMagic, 4);
  PutU32(bytes, 1);
  PutU32(bytes, static_cast<std::uint32_t>(model.classes()));
  PutU32(bytes, static_cast<std::uint32_t>(model.dim()));
  for (Index k = 0; k < model.W.rows(); ++k)
    for (Index d = 0; d < model.W.cols(); ++d) PutF64(bytes, model.W(k, d));
  for (Index k = 0; k < model.b.size(); ++k) PutF64(bytes, model.b[k]);
  WriteFileAtomic(path, bytes);

  nlohmann::json j;
  j["vocab"] = {{"kind", model.vocab.kind() == LabelKind::kPos ? "pos" : "dep"},
                {"labels", model.vocab.labels()},
                {"counts", model.vocab.counts()}};
  j["config"] = {{"learning_rate", config.learning_rate}, {"momentum", config.momentum},
                 {"nesterov", config.nesterov},           {"batch_size", config.batch_size},
                 {"patience_epochs", config.patience_epochs}, {"min_delta", config.min_delta},
                 {"max_epochs", config.max_epochs},       {"seed", config.seed}};
  j["best_epoch"] = state.best_epoch;
  j["epochs_run"] = state.epochs_run;
  j["dev_accuracy"] = state.best_val_accuracy;
  std::filesystem::path side = path;
  side += ".json";
  WriteFileAtomic(side, j.dump(2) + "\n");
}

ProbeModel LoadModel(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || bytes.compare(0, 4, kModelMagic, 4) != 0)
    throw DataError(path.string() + ": not an SPM1 checkpoint");
  if (GetLE(p + 4, 4) != 1) throw DataError(path.string() + ": unsupported checkpoint version");
  const auto K = static_cast<Index>(GetLE(p + 8, 4));
  const auto D = static_cast<Index>(GetLE(p + 12, 4));
  if (bytes.size() != static_cast<std::size_t>(16 + 8 * (K * D + K)))
    throw DataError(path.string() + ": checkpoint size mismatch");
  std::filesystem::path side = path;
  side += ".json";
  nlohmann::json j = nlohmann::json::parse(ReadFile(side));
  const auto& v = j.at("vocab");
  LabelVocab vocab(v.at("kind") == "pos" ? LabelKind::kPos : LabelKind::kDep,
                   v.at("labels").get<std::vector<std::string>>(),
                   v.at("counts").get<std::vector<std::size_t>>());
  if (static_cast<Index>(vocab.size()) != K)
    throw DataError(path.string() + ": vocab size disagrees with checkpoint");
  ProbeModel m = ProbeModel::Zeros(vocab, static_cast<std::size_t>(D));
  const unsigned char* q = p + 16;
  for (Index k = 0; k < K; ++k)
    for (Index d = 0; d < D; ++d, q += 8) m.W(k, d) = std::bit_cast<double>(GetLE(q, 8));
  for (Index k = 0; k < K; ++k, q += 8) m.b[k] = std::bit_cast<double>(GetLE(q, 8));
  return m;
}

std::string EpochLogCsv(const std::vector<EpochRecord>& log) {
  std::string out = "epoch,train_nll,dev_accuracy\n";
  for (const EpochRecord& r : log)
    out += std::to_string(r.epoch) + "," + FormatDecimals(r.train_nll, 8) + "," +
           FormatDecimals(r.dev_accuracy, 6) + "\n";
  return out;
}

}  // namespace syntaxprobe
