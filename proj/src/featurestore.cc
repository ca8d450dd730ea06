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

#include "syntaxprobe/featurestore.h"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "syntaxprobe/util.h"

namespace syntaxprobe {
namespace {

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

void DecodeFloats(const unsigned char* p, std::size_t count, float* out) {
  for (std::size_t i = 0; i < count; ++i, p += 4) out[i] = std::bit_cast<float>(GetU32(p));
}

FeatureHeader ReadHeaderFrom(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char buf[kFeatureHeaderBytes];
  in.read(reinterpret_cast<char*>(buf), sizeof(buf));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(buf)))
    throw DataError(path.string() + ": truncated header");
  if (std::memcmp(buf, kFeatureMagic, 4) != 0)
    throw DataError(path.string() + ": bad magic (not an SPB1 feature file)");
  FeatureHeader h;
  h.version = GetU32(buf + 4);
  h.layers = GetU32(buf + 8);
  h.frames = GetU32(buf + 12);
  h.dim = GetU32(buf + 16);
  if (h.version != kFeatureVersion)
    throw DataError(path.string() + ": unsupported version " + std::to_string(h.version));
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError(path.string() + ": cannot stat");
  const std::uintmax_t expected =
      kFeatureHeaderBytes + std::uintmax_t{4} * h.layers * h.frames * h.dim;
  if (size != expected)
    throw DataError(path.string() + ": size " + std::to_string(size) + " != expected " +
                    std::to_string(expected) + " (truncated or corrupt)");
  return h;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path.string());
  return in;
}

std::string SafeFileStem(const std::string& id) {
  std::string out;
  bool changed = false;
  for (char c : id) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') {
      out.push_back(c);
    } else {
      out.push_back('_');
      changed = true;
    }
  }
  if (changed || out.empty() || out.front() == '.') {
    Fnv1a h;
    h.Update(id);
    out += "-" + h.hex().substr(0, 8);
  }
  return out;
}

}  // namespace

void WriteFeatureFile(const std::filesystem::path& path, const FeatureTensor& t) {
  const std::size_t count = std::size_t{t.layers} * t.frames * t.dim;
  if (t.data.size() != count)
    throw std::invalid_argument("feature tensor data size does not match its shape");
  for (float v : t.data)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite value in features for " + path.string());
  std::string bytes;
  bytes.reserve(kFeatureHeaderBytes + 4 * count);
  bytes.append(kFeatureMagic, 4);
  PutU32(bytes, kFeatureVersion);
  PutU32(bytes, t.layers);
  PutU32(bytes, t.frames);
  PutU32(bytes, t.dim);
  for (float v : t.data) PutU32(bytes, std::bit_cast<std::uint32_t>(v));
  WriteFileAtomic(path, bytes);
}

FeatureHeader ReadFeatureHeader(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  return ReadHeaderFrom(in, path);
}

FrameMatrix ReadLayer(const std::filesystem::path& path, std::uint32_t layer) {
  std::ifstream in = OpenForRead(path);
  FeatureHeader h = ReadHeaderFrom(in, path);
  if (layer >= h.layers)
    throw std::out_of_range(path.string() + ": layer " + std::to_string(layer) +
                            " out of range [0," + std::to_string(h.layers) + ")");
  const std::size_t count = std::size_t{h.frames} * h.dim;
  in.seekg(static_cast<std::streamoff>(kFeatureHeaderBytes + 4 * layer * count));
  std::vector<unsigned char> raw(4 * count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw DataError(path.string() + ": short read");
  FrameMatrix m(h.frames, h.dim);
  DecodeFloats(raw.data(), count, m.data());
  return m;
}

FeatureTensor ReadFeatureFile(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  FeatureHeader h = ReadHeaderFrom(in, path);
  FeatureTensor t(h.layers, h.frames, h.dim);
  std::vector<unsigned char> raw(4 * t.data.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw DataError(path.string() + ": short read");
  DecodeFloats(raw.data(), t.data.size(), t.data.data());
  return t;
}

std::uint32_t Manifest::layer_count() const {
  std::uint32_t l = 0;
  for (const auto& [id, e] : entries) l = std::max(l, e.layer_count);
  return l;
}

Manifest Manifest::Load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  Manifest m;
  try {
    m.layer_indexing = j.value("layer_indexing", "");
    for (const auto& [id, e] : j.at("entries").items()) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.duration_s = e.at("duration_s").get<double>();
      entry.sample_rate = e.value("sample_rate", 16000);
      entry.layer_count = e.at("layer_count").get<std::uint32_t>();
      entry.dim = e.at("dim").get<std::uint32_t>();
      entry.frame_hop_s = e.value("frame_hop_s", 0.020);
      entry.frame_window_s = e.value("frame_window_s", 0.025);
      if (!(entry.frame_hop_s > 0.0) || !(entry.frame_window_s > 0.0))
        throw DataError(path.string() + ": entry '" + id +
                        "' must have positive frame_hop_s and frame_window_s");
      m.entries.emplace(id, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

void Manifest::Save(const std::filesystem::path& path) const {
  nlohmann::json entries_json = nlohmann::json::object();
  for (const auto& [id, e] : entries) {
    entries_json[id] = {{"path", e.path},
                        {"duration_s", e.duration_s},
                        {"sample_rate", e.sample_rate},
                        {"layer_count", e.layer_count},
                        {"dim", e.dim},
                        {"frame_hop_s", e.frame_hop_s},
                        {"frame_window_s", e.frame_window_s}};
  }
  nlohmann::json j = {{"version", 1}, {"entries", entries_json}};
  if (!layer_indexing.empty()) j["layer_indexing"] = layer_indexing;
  WriteFileAtomic(path, j.dump(2) + "\n");
}

FeatureStore::FeatureStore(std::filesystem::path manifest_path, bool create_if_missing)
    : manifest_path_(std::move(manifest_path)) {
  if (create_if_missing && !std::filesystem::exists(manifest_path_)) return;
  manifest_ = Manifest::Load(manifest_path_);
}

const ManifestEntry& FeatureStore::entry(const std::string& utterance_id) const {
  auto it = manifest_.entries.find(utterance_id);
  if (it == manifest_.entries.end())
    throw DataError("no manifest entry for '" + utterance_id + "' in " +
                    manifest_path_.string());
  return it->second;
}

bool FeatureStore::contains(const std::string& utterance_id) const {
  return manifest_.entries.count(utterance_id) != 0;
}

std::filesystem::path FeatureStore::ResolvePath(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  if (p.is_absolute()) return p;
  return manifest_path_.parent_path() / p;
}

FrameMatrix FeatureStore::ReadLayer(const std::string& utterance_id,
                                    std::uint32_t layer) const {
  const ManifestEntry& e = entry(utterance_id);
  if (layer >= e.layer_count)
    throw std::out_of_range("layer " + std::to_string(layer) + " out of range for '" +
                            utterance_id + "' (" + std::to_string(e.layer_count) + " layers)");
  FrameMatrix m = syntaxprobe::ReadLayer(ResolvePath(e), layer);
  if (static_cast<std::uint32_t>(m.cols()) != e.dim)
    throw DataError("feature dim of '" + utterance_id + "' disagrees with manifest");
  return m;
}

void FeatureStore::WriteFeatures(const std::string& utterance_id, const FeatureTensor& tensor,
                                 double duration_s, int sample_rate, double frame_hop_s,
                                 double frame_window_s) {
  if (!(frame_hop_s > 0.0) || !(frame_window_s > 0.0))
    throw std::invalid_argument("frame hop and window must be positive");
  ManifestEntry e;
  e.path = (std::filesystem::path("features") / (SafeFileStem(utterance_id) + ".spb")).string();
  e.duration_s = duration_s;
  e.sample_rate = sample_rate;
  e.layer_count = tensor.layers;
  e.dim = tensor.dim;
  e.frame_hop_s = frame_hop_s;
  e.frame_window_s = frame_window_s;
  WriteFeatureFile(ResolvePath(e), tensor);
  manifest_.entries[utterance_id] = e;
  manifest_.Save(manifest_path_);
}

std::string FeatureStore::Hash() const {
  Fnv1a h;
  h.Update(std::filesystem::absolute(manifest_path_).lexically_normal().string());
  for (const auto& [id, e] : manifest_.entries) {
    h.Update(id + "\t" + e.path + "\t" + FormatFixed(e.duration_s) + "\t" +
             std::to_string(e.layer_count) + "\t" + std::to_string(e.dim) + "\t" +
             FormatFixed(e.frame_hop_s) + "\t" + FormatFixed(e.frame_window_s) + "\n");
    std::error_code ec;
    auto mtime = std::filesystem::last_write_time(ResolvePath(e), ec);
    if (!ec) {
      auto ticks = mtime.time_since_epoch().count();
      h.Update(&ticks, sizeof(ticks));
    }
  }
  return h.hex();
}

void FeatureStore::set_layer_indexing(std::string text) {
  manifest_.layer_indexing = std::move(text);
  manifest_.Save(manifest_path_);
}

long long ExpectedFrameCount(double duration_s, double hop_s, double window_s) {
  if (!(hop_s > 0.0) || !(window_s > 0.0))
    throw std::invalid_argument("ExpectedFrameCount: hop and window must be positive");
  if (duration_s < window_s) {
    std::cerr << "warning: duration " << duration_s << " s shorter than one "
              << window_s << " s window; expecting 0 frames\n";
    return 0;
  }
  // Small slack so that exact multiples are not lost to rounding.
  return static_cast<long long>(std::floor((duration_s - window_s) / hop_s + 1e-9)) + 1;
}

}  // namespace syntaxprobe
