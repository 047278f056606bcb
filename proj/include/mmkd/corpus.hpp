// Copyright 2026 The mmkd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Data model and line-record I/O for training corpora, benchmark source
// datasets, image feature stores and exported embeddings.
//
// Schemas (field names are the JSON keys):
//
//   RawInstance     {"id", "task", "query_text", "pos_text", "neg_text"?,
//                    "image_ref"?, "pos_image_ref"?}
//   ParallelPair    {"id", "language", "english_text", "translated_text",
//                    "image_ref"?, "identity_translation"?}
//   image features  {"image_ref", "features": [k reals]}
//   embeddings      {"id", "vector": [d reals, 9 significant digits]}
//   DatasetManifest {"name", "cardinality", "languages", "tasks",
//                    "records", "class_set"?, "class_names"?}
//   DatasetRecord   {"id", "image_ref"?, "crop_ref"?, "label"?,
//                    "text": {"EN": [...], ...}, "answer": {"EN": [...]}?}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmkd/common.hpp"
#include "mmkd/records.hpp"

namespace mmkd {

// Tasks dropped from the training mixture.
bool is_excluded_training_task(std::string_view task);

struct RawInstance {
  std::string id;
  std::string task;
  std::string query_text;
  std::string pos_text;
  std::optional<std::string> neg_text;
  // Image of the query; its placeholder lives in query_text.
  std::optional<std::string> image_ref;
  // Image of the positive target (text-to-image tasks).
  std::optional<std::string> pos_image_ref;

  Json to_json() const;
  static RawInstance from_json(const Json& obj);
  // Throws ValidationError describing the first violated invariant.
  void validate() const;

  bool operator==(const RawInstance&) const = default;
};

std::vector<RawInstance> read_instances(const std::filesystem::path& path);
void write_instances(const std::filesystem::path& path, std::span<const RawInstance> instances,
                     const std::optional<Provenance>& provenance = std::nullopt);

// Keeps the first `limit` instances of every task, preserving file order.
std::vector<RawInstance> truncate_per_task(std::span<const RawInstance> instances,
                                           std::size_t limit = 10'000);

struct ParallelPair {
  std::string id;
  Language language = Language::EN;
  std::string english_text;
  std::string translated_text;
  std::optional<std::string> image_ref;
  // Set by test oracles that deliberately produce untranslated pairs.
  bool identity_translation = false;

  Json to_json() const;
  static ParallelPair from_json(const Json& obj);

  bool operator==(const ParallelPair&) const = default;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
};

// Lists every violated ParallelPair invariant. Never throws.
ValidationReport validate_pair(const ParallelPair& pair);

std::vector<ParallelPair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, std::span<const ParallelPair> pairs,
                 const std::optional<Provenance>& provenance = std::nullopt);

// Raw visual features standing in for a vision encoder's output.
struct ImageFeatureRecord {
  std::string image_ref;
  std::vector<double> features;
};

// Resolves image references to feature vectors of a fixed dimension.
// A synthetic store answers every reference with a deterministic
// pseudo-random vector in [-1, 1)^k keyed by fnv1a64(image_ref).
class ImageFeatureStore {
 public:
  static ImageFeatureStore synthetic(std::size_t dim);
  static ImageFeatureStore load(const std::filesystem::path& path);

  explicit ImageFeatureStore(std::size_t dim) : dim_(dim) {}

  void add(ImageFeatureRecord record);
  bool contains(const std::string& image_ref) const;
  // Throws ValidationError for unknown references in a non-synthetic store.
  std::vector<double> features(const std::string& image_ref) const;

  std::size_t dim() const { return dim_; }
  bool is_synthetic() const { return synthetic_; }
  std::size_t size() const { return records_.size(); }

  void save(const std::filesystem::path& path) const;

 private:
  std::size_t dim_;
  bool synthetic_ = false;
  std::map<std::string, std::vector<double>> records_;
};

std::vector<double> synthetic_image_features(std::string_view image_ref, std::size_t dim);

// Exported pooled vectors. Stored with 9 significant digits, which
// round-trips single precision exactly.
using EmbeddingVector = std::vector<float>;
using EmbeddingList = std::vector<std::pair<std::string, EmbeddingVector>>;

void write_embeddings(const std::filesystem::path& path, const EmbeddingList& records,
                      const std::optional<Provenance>& provenance = std::nullopt);
std::map<std::string, EmbeddingVector> read_embeddings(const std::filesystem::path& path);
// Same as read_embeddings but keeps file order.
EmbeddingList read_embedding_list(const std::filesystem::path& path);

struct DatasetManifest {
  std::string name;
  std::size_t cardinality = 0;
  std::set<Language> languages;
  std::set<TaskKind> tasks;
  // Records file, relative to the manifest's directory.
  std::string records;
  // Class identifiers for classification datasets.
  std::optional<std::vector<std::string>> class_set;
  // Per-language display names aligned with class_set.
  std::map<Language, std::vector<std::string>> class_names;

  Json to_json() const;
  static DatasetManifest from_json(const Json& obj);
  void validate() const;
};

struct DatasetRecord {
  std::string id;
  std::optional<std::string> image_ref;
  // Image crop of the grounded object (visual grounding).
  std::optional<std::string> crop_ref;
  // Class identifier (classification), must be in the manifest's class_set.
  std::optional<std::string> label;
  // Captions, questions or object labels per language; the first entry is used.
  std::map<Language, std::vector<std::string>> text;
  // Answers per language (visual question answering).
  std::map<Language, std::vector<std::string>> answer;

  Json to_json() const;
  static DatasetRecord from_json(const Json& obj);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> records;
};

std::vector<DatasetManifest> read_manifests(const std::filesystem::path& path);
void write_manifests(const std::filesystem::path& path, std::span<const DatasetManifest> manifests);
std::vector<DatasetRecord> read_dataset_records(const std::filesystem::path& path);
void write_dataset_records(const std::filesystem::path& path,
                           std::span<const DatasetRecord> records);

// Loads the records referenced by `manifest` (resolved against `base_dir`)
// and checks cardinality.
Dataset load_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

}  // namespace mmkd
