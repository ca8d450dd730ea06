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

#ifndef SYNTAXPROBE_FEATURESTORE_H_
#define SYNTAXPROBE_FEATURESTORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace syntaxprobe {

// Feature file layout (all little-endian):
//   magic    "SPB1"                 4 bytes
//   version  u32 (= 1)              4 bytes
//   layers   u32 L                  4 bytes
//   frames   u32 T                  4 bytes
//   dim      u32 D                  4 bytes
//   data     f32[L][T][D]           layer-major, then frame-major
// Total size is exactly 20 + 4*L*T*D bytes.
inline constexpr char kFeatureMagic[4] = {'S', 'P', 'B', '1'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 20;

using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense L x T x D block of frame vectors.
struct FeatureTensor {
  std::uint32_t layers = 0;
  std::uint32_t frames = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;

  FeatureTensor() = default;
  FeatureTensor(std::uint32_t l, std::uint32_t t, std::uint32_t d)
      : layers(l), frames(t), dim(d), data(std::size_t{l} * t * d, 0.0f) {}

  float& at(std::uint32_t l, std::uint32_t t, std::uint32_t d) {
    return data[(std::size_t{l} * frames + t) * dim + d];
  }
  float at(std::uint32_t l, std::uint32_t t, std::uint32_t d) const {
    return data[(std::size_t{l} * frames + t) * dim + d];
  }
  std::span<const float> layer(std::uint32_t l) const {
    return {data.data() + std::size_t{l} * frames * dim, std::size_t{frames} * dim};
  }
};

struct FeatureHeader {
  std::uint32_t version = 0;
  std::uint32_t layers = 0;
  std::uint32_t frames = 0;
  std::uint32_t dim = 0;
};

// Throws std::invalid_argument on shape mismatch or non-finite values and
// std::runtime_error on IO failure. The write goes through a temp file.
void WriteFeatureFile(const std::filesystem::path& path, const FeatureTensor& tensor);

// The reader functions throw DataError for missing, truncated, or malformed
// files and std::out_of_range for a bad layer index.
FeatureHeader ReadFeatureHeader(const std::filesystem::path& path);
FrameMatrix ReadLayer(const std::filesystem::path& path, std::uint32_t layer);
FeatureTensor ReadFeatureFile(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest directory unless absolute
  double duration_s = 0.0;
  int sample_rate = 16000;
  std::uint32_t layer_count = 0;
  std::uint32_t dim = 0;
  double frame_hop_s = 0.020;
  double frame_window_s = 0.025;
};

struct Manifest {
  std::map<std::string, ManifestEntry> entries;
  // Free-text description of layer numbering supplied by the extractor,
  // e.g. "0=conv encoder output, 1..24=transformer blocks".
  std::string layer_indexing;

  // Maximum layer_count over entries (0 when empty).
  std::uint32_t layer_count() const;

  static Manifest Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

// Manifest plus the directory its relative paths resolve against.
class FeatureStore {
 public:
  // Opens an existing manifest, or starts an empty one when
  // `create_if_missing` and the file does not exist.
  explicit FeatureStore(std::filesystem::path manifest_path,
                        bool create_if_missing = false);

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& manifest_path() const { return manifest_path_; }
  const ManifestEntry& entry(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const;
  std::filesystem::path ResolvePath(const ManifestEntry& entry) const;

  FrameMatrix ReadLayer(const std::string& utterance_id, std::uint32_t layer) const;

  // Writes features/<id>.spb beside the manifest and records the entry;
  // the manifest is rewritten atomically after each call.
  void WriteFeatures(const std::string& utterance_id, const FeatureTensor& tensor,
                     double duration_s, int sample_rate = 16000,
                     double frame_hop_s = 0.020, double frame_window_s = 0.025);

  // Hash of the manifest contents (entries only), for cache keys.
  std::string Hash() const;
  void set_layer_indexing(std::string text);

 private:
  std::filesystem::path manifest_path_;
  Manifest manifest_;
};

// floor((duration - window) / hop) + 1, or 0 (with a warning on stderr) when
// the duration is shorter than one window.
long long ExpectedFrameCount(double duration_s, double hop_s, double window_s);

}  // namespace syntaxprobe

#endif  // SYNTAXPROBE_FEATURESTORE_H_
