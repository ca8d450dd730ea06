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

#ifndef SYNTAXPROBE_UTIL_H_
#define SYNTAXPROBE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace syntaxprobe {

// Bad or inconsistent input data (corrupt files, invalid treebanks, ...).
// The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during training (non-finite gradients and the like).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform draw from [0, n) by rejection sampling on the raw 64-bit output.
// Unlike std::uniform_int_distribution this is identical on every standard
// library, which keeps splits and shuffles portable.
std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> SeededPermutation(std::size_t n, std::mt19937_64& rng);

// Generator seeded from a (seed, stream) pair via std::seed_seq.
std::mt19937_64 MakeRng(std::uint64_t seed, std::uint64_t stream = 0);

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void Update(std::string_view bytes);
  void Update(const void* data, std::size_t size);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// Shortest round-tripping decimal representation without exponent.
std::string FormatFixed(double value);
// Fixed number of decimals, used for report tables.
std::string FormatDecimals(double value, int decimals);

// Parses a plain decimal number ("0.25", "-3"); no exponent, no trailing
// garbage. Returns false on failure.
bool ParseDecimal(std::string_view text, double* value);
bool ParseInt(std::string_view text, long long* value);

std::vector<std::string_view> Split(std::string_view text, char sep);

// Writes `contents` to `path` through a temporary file and rename, so readers
// never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_UTIL_H_
