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

#include "mmkd/corpus.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "mmkd/random.hpp"

namespace mmkd {
namespace {

constexpr std::array<std::string_view, 7> kExcludedTasks = {
    "ChartQA", "DocQA", "DocVQA", "HatefulMemes", "InfographicsVQA", "ScienceQA", "VisDial"};

std::map<Language, std::vector<std::string>> parse_language_lists(const Json& obj,
                                                                  const char* field) {
  std::map<Language, std::vector<std::string>> out;
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_object()) throw ValidationError(std::string("field '") + field + "' must be an object");
  for (const auto& [code, values] : it->items()) {
    const Language lang = parse_language(code);
    std::vector<std::string> list;
    if (values.is_string()) {
      list.push_back(values.get<std::string>());
    } else {
      list = values.get<std::vector<std::string>>();
    }
    out[lang] = std::move(list);
  }
  return out;
}

Json language_lists_to_json(const std::map<Language, std::vector<std::string>>& lists) {
  Json obj = Json::object();
  for (const auto& [lang, values] : lists) obj[std::string(to_string(lang))] = values;
  return obj;
}

}  // namespace

bool is_excluded_training_task(std::string_view task) {
  for (auto name : kExcludedTasks) {
    if (name == task) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// RawInstance

Json RawInstance::to_json() const {
  Json obj{{"id", id}, {"task", task}, {"query_text", query_text}, {"pos_text", pos_text}};
  if (neg_text) obj["neg_text"] = *neg_text;
  if (image_ref) obj["image_ref"] = *image_ref;
  if (pos_image_ref) obj["pos_image_ref"] = *pos_image_ref;
  return obj;
}

RawInstance RawInstance::from_json(const Json& obj) {
  RawInstance inst;
  inst.id = require_string(obj, "id");
  inst.task = require_string(obj, "task");
  inst.query_text = require_string(obj, "query_text");
  inst.pos_text = require_string(obj, "pos_text");
  inst.neg_text = optional_string(obj, "neg_text");
  inst.image_ref = optional_string(obj, "image_ref");
  inst.pos_image_ref = optional_string(obj, "pos_image_ref");
  inst.validate();
  return inst;
}

void RawInstance::validate() const {
  if (id.empty()) throw ValidationError("id must be non-empty");
  if (task.empty()) throw ValidationError("task must be non-empty");
  if (is_excluded_training_task(task)) {
    throw ValidationError("task '" + task + "' is excluded from the training mixture");
  }
  if (query_text.empty()) throw ValidationError("query_text must be non-empty");
  if (pos_text.empty()) throw ValidationError("pos_text must be non-empty");
  auto check_image = [](const std::string& text, const std::optional<std::string>& ref,
                        const char* text_field, const char* ref_field) {
    const std::size_t n = count_occurrences(text, kImagePlaceholder);
    if (n > 1) throw ValidationError(std::string(text_field) + " has more than one image placeholder");
    if ((n == 1) != ref.has_value()) {
      throw ValidationError(std::string(text_field) + " image placeholder must be present iff " +
                            ref_field + " is set");
    }
  };
  check_image(query_text, image_ref, "query_text", "image_ref");
  check_image(pos_text, pos_image_ref, "pos_text", "pos_image_ref");
}

std::vector<RawInstance> read_instances(const std::filesystem::path& path) {
  std::vector<RawInstance> out;
  std::unordered_set<std::string> seen;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    RawInstance inst = RawInstance::from_json(obj);
    if (!seen.insert(inst.id).second) throw ValidationError("duplicate id '" + inst.id + "'");
    out.push_back(std::move(inst));
  });
  return out;
}

void write_instances(const std::filesystem::path& path, std::span<const RawInstance> instances,
                     const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& inst : instances) w.write(inst.to_json());
  w.close();
}

std::vector<RawInstance> truncate_per_task(std::span<const RawInstance> instances,
                                           std::size_t limit) {
  std::map<std::string, std::size_t> counts;
  std::vector<RawInstance> out;
  for (const auto& inst : instances) {
    if (counts[inst.task]++ < limit) out.push_back(inst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ParallelPair

Json ParallelPair::to_json() const {
  Json obj{{"id", id},
           {"language", std::string(to_string(language))},
           {"english_text", english_text},
           {"translated_text", translated_text}};
  if (image_ref) obj["image_ref"] = *image_ref;
  if (identity_translation) obj["identity_translation"] = true;
  return obj;
}

ParallelPair ParallelPair::from_json(const Json& obj) {
  ParallelPair p;
  p.id = require_string(obj, "id");
  p.language = parse_language(require_string(obj, "language"));
  p.english_text = require_string(obj, "english_text");
  p.translated_text = require_string(obj, "translated_text");
  p.image_ref = optional_string(obj, "image_ref");
  p.identity_translation = obj.value("identity_translation", false);
  return p;
}

bool ValidationReport::has(std::string_view code) const {
  for (const auto& v : violations) {
    if (v.code == code) return true;
  }
  return false;
}

ValidationReport validate_pair(const ParallelPair& pair) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };
  if (pair.id.empty()) add("empty id", "id must be non-empty");
  if (pair.english_text.empty()) add("empty text", "english_text is empty");
  if (pair.translated_text.empty()) add("empty text", "translated_text is empty");

  const std::size_t en = count_occurrences(pair.english_text, kImagePlaceholder);
  const std::size_t tr = count_occurrences(pair.translated_text, kImagePlaceholder);
  if (en != tr) {
    add("placeholder parity", "image placeholder appears " + std::to_string(en) +
                                  "x in english_text but " + std::to_string(tr) +
                                  "x in translated_text");
  } else if (en > 1) {
    add("placeholder count", "image placeholder appears more than once");
  } else if (en == 1 && !pair.image_ref) {
    add("image_ref missing", "texts contain the image placeholder but image_ref is absent");
  } else if (en == 0 && pair.image_ref) {
    add("image_ref without placeholder", "image_ref is set but texts lack the placeholder");
  }
  if (pair.language != Language::EN && pair.english_text == pair.translated_text &&
      !pair.identity_translation) {
    add("identity translation", "translated_text equals english_text for a non-English pair");
  }
  return report;
}

std::vector<ParallelPair> read_pairs(const std::filesystem::path& path) {
  std::vector<ParallelPair> out;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    out.push_back(ParallelPair::from_json(obj));
  });
  return out;
}

void write_pairs(const std::filesystem::path& path, std::span<const ParallelPair> pairs,
                 const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& p : pairs) w.write(p.to_json());
  w.close();
}

// ---------------------------------------------------------------------------
// Image features

std::vector<double> synthetic_image_features(std::string_view image_ref, std::size_t dim) {
  SplitMix64 rng(fnv1a64(image_ref));
  std::vector<double> out(dim);
  for (auto& v : out) v = rng.uniform(-1.0, 1.0);
  return out;
}

ImageFeatureStore ImageFeatureStore::synthetic(std::size_t dim) {
  if (dim == 0) throw ValidationError("feature dimension must be positive");
  ImageFeatureStore store(dim);
  store.synthetic_ = true;
  return store;
}

ImageFeatureStore ImageFeatureStore::load(const std::filesystem::path& path) {
  std::optional<ImageFeatureStore> store;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    ImageFeatureRecord rec;
    rec.image_ref = require_string(obj, "image_ref");
    rec.features = require_field(obj, "features").get<std::vector<double>>();
    if (!store) store.emplace(rec.features.size());
    store->add(std::move(rec));
  });
  if (!store) throw ValidationError("image feature store '" + path.string() + "' is empty");
  return std::move(*store);
}

void ImageFeatureStore::add(ImageFeatureRecord record) {
  if (record.features.size() != dim_ || dim_ == 0) {
    throw ValidationError("image '" + record.image_ref + "' has dimension " +
                          std::to_string(record.features.size()) + ", store expects " +
                          std::to_string(dim_));
  }
  for (double v : record.features) {
    if (!std::isfinite(v)) throw ValidationError("image '" + record.image_ref + "' has non-finite features");
  }
  if (!records_.emplace(record.image_ref, std::move(record.features)).second) {
    throw ValidationError("duplicate image_ref '" + record.image_ref + "'");
  }
}

bool ImageFeatureStore::contains(const std::string& image_ref) const {
  return synthetic_ || records_.count(image_ref) > 0;
}

std::vector<double> ImageFeatureStore::features(const std::string& image_ref) const {
  if (auto it = records_.find(image_ref); it != records_.end()) return it->second;
  if (synthetic_) return synthetic_image_features(image_ref, dim_);
  throw ValidationError("image_ref '" + image_ref + "' not found in feature store");
}

void ImageFeatureStore::save(const std::filesystem::path& path) const {
  RecordWriter w(path);
  for (const auto& [ref, feats] : records_) w.write(Json{{"image_ref", ref}, {"features", feats}});
  w.close();
}

// ---------------------------------------------------------------------------
// Embeddings

void write_embeddings(const std::filesystem::path& path, const EmbeddingList& records,
                      const std::optional<Provenance>& provenance) {
  std::size_t dim = 0;
  if (!records.empty()) dim = records.front().second.size();
  for (const auto& [id, vec] : records) {
    if (vec.size() != dim) {
      throw ValidationError("embedding '" + id + "' has dimension " + std::to_string(vec.size()) +
                            ", expected " + std::to_string(dim));
    }
  }
  RecordWriter w(path, provenance);
  char buf[32];
  for (const auto& [id, vec] : records) {
    std::string line = "{\"id\":" + dump_line(Json(id)) + ",\"vector\":[";
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (!std::isfinite(vec[i])) throw ValidationError("embedding '" + id + "' is not finite");
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(vec[i]));
      if (i) line += ',';
      line += buf;
    }
    line += "]}";
    w.write_raw(line);
  }
  w.close();
}

EmbeddingList read_embedding_list(const std::filesystem::path& path) {
  EmbeddingList out;
  std::unordered_set<std::string> seen;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    std::string id = require_string(obj, "id");
    const auto values = require_field(obj, "vector").get<std::vector<double>>();
    EmbeddingVector vec(values.begin(), values.end());
    if (!out.empty() && vec.size() != out.front().second.size()) {
      throw ValidationError("embedding '" + id + "' has dimension " + std::to_string(vec.size()) +
                            ", expected " + std::to_string(out.front().second.size()));
    }
    if (!seen.insert(id).second) throw ValidationError("duplicate embedding id '" + id + "'");
    out.emplace_back(std::move(id), std::move(vec));
  });
  return out;
}

std::map<std::string, EmbeddingVector> read_embeddings(const std::filesystem::path& path) {
  std::map<std::string, EmbeddingVector> out;
  for (auto& [id, vec] : read_embedding_list(path)) out.emplace(std::move(id), std::move(vec));
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark source datasets

Json DatasetManifest::to_json() const {
  Json langs = Json::array();
  for (Language l : languages) langs.push_back(std::string(to_string(l)));
  Json tasks_json = Json::array();
  for (TaskKind t : tasks) tasks_json.push_back(std::string(to_string(t)));
  Json obj{{"name", name},
           {"cardinality", cardinality},
           {"languages", langs},
           {"tasks", tasks_json},
           {"records", records}};
  if (class_set) obj["class_set"] = *class_set;
  if (!class_names.empty()) obj["class_names"] = language_lists_to_json(class_names);
  return obj;
}

DatasetManifest DatasetManifest::from_json(const Json& obj) {
  DatasetManifest m;
  m.name = require_string(obj, "name");
  const Json& card = require_field(obj, "cardinality");
  if (!card.is_number_integer() || card.get<long long>() <= 0) {
    throw ValidationError("cardinality must be a positive integer");
  }
  m.cardinality = card.get<std::size_t>();
  for (const auto& l : require_field(obj, "languages")) m.languages.insert(parse_language(l.get<std::string>()));
  for (const auto& t : require_field(obj, "tasks")) m.tasks.insert(parse_task_kind(t.get<std::string>()));
  m.records = obj.value("records", std::string());
  if (auto it = obj.find("class_set"); it != obj.end() && !it->is_null()) {
    m.class_set = it->get<std::vector<std::string>>();
  }
  m.class_names = parse_language_lists(obj, "class_names");
  m.validate();
  return m;
}

void DatasetManifest::validate() const {
  if (name.empty()) throw ValidationError("manifest name must be non-empty");
  if (cardinality == 0) throw ValidationError("manifest '" + name + "' cardinality must be positive");
  if (tasks.empty()) throw ValidationError("manifest '" + name + "' has no tasks");
  if (languages.empty()) throw ValidationError("manifest '" + name + "' has no languages");
  if (tasks.count(TaskKind::C) && (!class_set || class_set->size() < 2)) {
    throw ValidationError("manifest '" + name + "' has task C but fewer than 2 classes");
  }
  if (class_set) {
    for (const auto& [lang, names] : class_names) {
      if (names.size() != class_set->size()) {
        throw ValidationError("manifest '" + name + "' class_names for " +
                              std::string(to_string(lang)) + " do not align with class_set");
      }
    }
  }
}

Json DatasetRecord::to_json() const {
  Json obj{{"id", id}, {"text", language_lists_to_json(text)}};
  if (image_ref) obj["image_ref"] = *image_ref;
  if (crop_ref) obj["crop_ref"] = *crop_ref;
  if (label) obj["label"] = *label;
  if (!answer.empty()) obj["answer"] = language_lists_to_json(answer);
  return obj;
}

DatasetRecord DatasetRecord::from_json(const Json& obj) {
  DatasetRecord r;
  r.id = require_string(obj, "id");
  r.image_ref = optional_string(obj, "image_ref");
  r.crop_ref = optional_string(obj, "crop_ref");
  r.label = optional_string(obj, "label");
  r.text = parse_language_lists(obj, "text");
  r.answer = parse_language_lists(obj, "answer");
  return r;
}

std::vector<DatasetManifest> read_manifests(const std::filesystem::path& path) {
  std::vector<DatasetManifest> out;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    out.push_back(DatasetManifest::from_json(obj));
  });
  return out;
}

void write_manifests(const std::filesystem::path& path, std::span<const DatasetManifest> manifests) {
  RecordWriter w(path);
  for (const auto& m : manifests) w.write(m.to_json());
  w.close();
}

std::vector<DatasetRecord> read_dataset_records(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  std::unordered_set<std::string> seen;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    DatasetRecord r = DatasetRecord::from_json(obj);
    if (!seen.insert(r.id).second) throw ValidationError("duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  });
  return out;
}

void write_dataset_records(const std::filesystem::path& path,
                           std::span<const DatasetRecord> records) {
  RecordWriter w(path);
  for (const auto& r : records) w.write(r.to_json());
  w.close();
}

Dataset load_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
  manifest.validate();
  if (manifest.records.empty()) {
    throw ValidationError("manifest '" + manifest.name + "' does not reference a records file");
  }
  std::filesystem::path p = manifest.records;
  if (p.is_relative()) p = base_dir / p;
  Dataset ds{manifest, read_dataset_records(p)};
  if (ds.records.size() != manifest.cardinality) {
    throw ValidationError("manifest '" + manifest.name + "' declares cardinality " +
                          std::to_string(manifest.cardinality) + " but '" + p.string() + "' has " +
                          std::to_string(ds.records.size()) + " records");
  }
  return ds;
}

}  // namespace mmkd
