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

#ifndef SYNTAXPROBE_TESTS_SUPPORT_ORACLES_H_
#define SYNTAXPROBE_TESTS_SUPPORT_ORACLES_H_

// Reference computations used to check the library. None of them call into
// the code paths they are compared against.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace syntaxprobe::testing {

// Single root, every head in 0..n, no self loops, and parent-following from
// every token reaches the root within n steps.
inline bool IsTreeOracle(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n || heads[i] == i + 1) return false;
    if (heads[i] == 0) ++roots;
  }
  if (roots != 1) return false;
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != 0) {
      if (++steps > n) return false;
      cur = heads[cur - 1];
    }
  }
  return true;
}

// Every head array in {0..n}^n that forms a tree.
inline std::vector<std::vector<int>> EnumerateTrees(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> heads(n, 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      if (IsTreeOracle(heads)) out.push_back(heads);
      return;
    }
    for (int h = 0; h <= n; ++h) {
      heads[pos] = h;
      rec(pos + 1);
    }
  };
  rec(0);
  return out;
}

// Neumaier-compensated mean of column `d` over the selected rows.
template <typename Matrix>
double CompensatedMean(const Matrix& frames, const std::vector<std::size_t>& rows, long d) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t r : rows) {
    const double x = frames(static_cast<long>(r), d);
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(rows.size());
}

// Mean NLL of a linear softmax model evaluated from scratch with long double.
inline double NllOracle(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                        const Eigen::MatrixXd& X, const std::vector<int>& y) {
  long double total = 0.0L;
  for (long r = 0; r < X.rows(); ++r) {
    std::vector<long double> z(W.rows());
    long double m = -1e300L;
    for (long k = 0; k < W.rows(); ++k) {
      long double s = b[k];
      for (long d = 0; d < X.cols(); ++d) s += static_cast<long double>(W(k, d)) * X(r, d);
      z[k] = s;
      if (s > m) m = s;
    }
    long double denom = 0.0L;
    for (long double s : z) denom += std::exp(s - m);
    total += (m + std::log(denom)) - z[y[r]];
  }
  return static_cast<double>(total / X.rows());
}

struct FdGradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

// Central finite differences of NllOracle.
inline FdGradient FiniteDifferenceGradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                                           const Eigen::MatrixXd& X, const std::vector<int>& y,
                                           double step = 1e-4) {
  FdGradient g{Eigen::MatrixXd::Zero(W.rows(), W.cols()), Eigen::VectorXd::Zero(b.size())};
  for (long k = 0; k < W.rows(); ++k) {
    for (long d = 0; d < W.cols(); ++d) {
      Eigen::MatrixXd wp = W, wm = W;
      wp(k, d) += step;
      wm(k, d) -= step;
      g.dW(k, d) = (NllOracle(wp, b, X, y) - NllOracle(wm, b, X, y)) / (2 * step);
    }
    Eigen::VectorXd bp = b, bm = b;
    bp[k] += step;
    bm[k] -= step;
    g.db[k] = (NllOracle(W, bp, X, y) - NllOracle(W, bm, X, y)) / (2 * step);
  }
  return g;
}

// Scalar Nesterov lookahead iteration on f(theta) = theta^2 / 2.
inline double QuadraticNesterovOracle(double theta, double lr, double mu, int steps) {
  double v = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double g = theta + mu * v;  // f'(x) = x at the lookahead point
    v = mu * v - lr * g;
    theta += v;
  }
  return theta;
}

// Membership by exhaustive scan over every frame center.
inline std::vector<std::size_t> FramesInSpanOracle(double start, double end, double hop,
                                                   double window, std::size_t frames) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < frames; ++f) {
    const double c = static_cast<double>(f) * hop + window / 2;
    if (c >= start && c < end) out.push_back(f);
  }
  if (!out.empty() || frames == 0) return out;
  const double mid = (start + end) / 2;
  std::size_t best = 0;
  double best_d = 1e300;
  for (std::size_t f = 0; f < frames; ++f) {
    const double d = std::abs(static_cast<double>(f) * hop + window / 2 - mid);
    if (d < best_d) {
      best_d = d;
      best = f;
    }
  }
  return {best};
}

// Output length of the wav2vec2 convolutional feature encoder for a raw
// sample count: seven conv layers with these kernels and strides.
inline long long Wav2Vec2FrameCount(long long samples) {
  const int kernels[] = {10, 3, 3, 3, 3, 2, 2};
  const int strides[] = {5, 2, 2, 2, 2, 2, 2};
  long long len = samples;
  for (int i = 0; i < 7; ++i) len = (len - kernels[i]) / strides[i] + 1;
  return len;
}

}  // namespace syntaxprobe::testing

#endif  // SYNTAXPROBE_TESTS_SUPPORT_ORACLES_H_
