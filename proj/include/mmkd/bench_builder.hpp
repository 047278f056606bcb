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

// Builds retrieval suites from multilingual source datasets. Every
// benchmark instance has exactly one relevant candidate and n irrelevant
// ones sampled from the rest of the dataset (or, for classification, all
// other classes). Query and candidate strings are rendered from fixed
// per-language instruction templates in one of two styles.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmkd/common.hpp"
#include "mmkd/corpus.hpp"

namespace mmkd {

// Number of irrelevant candidates per instance: |classes| - 1 for
// classification, else 999 when the dataset has at least 1000 items and
// 99 otherwise.
std::size_t pool_size(std::size_t cardinality, TaskKind task,
                      std::optional<std::size_t> class_count = std::nullopt);

// Whether query and target templates exist for (task, language).
bool is_supported(TaskKind task, Language lang);

// Template text before substitution; throws ValidationError for gaps.
std::string_view query_template(TaskKind task, Language lang);
std::string_view target_template(TaskKind task, Language lang);

// Applies the style to a rendered string. Plain drops one trailing
// character from {. ! ? :}; Punctuation does the same, then appends
// `mark`.
std::string apply_style(std::string text, FormattingStyle style, char mark = '.');

// Substitutes {query_text} and applies the style ('?' for VQA queries).
std::string format_query(std::string_view query_text, TaskKind task, Language lang, FormattingStyle style);
// Substitutes {target_text} and applies the style.
std::string format_target(std::string_view target_text, TaskKind task, Language lang, FormattingStyle style);

struct Candidate {
  std::string key;
  std::string text;
  std::optional<std::string> image_ref;

  Json to_json() const;
  static Candidate from_json(const Json& obj);
  bool operator==(const Candidate&) const = default;
};

struct BenchInstance {
  std::string id;
  TaskKind task = TaskKind::I2T;
  Language language = Language::EN;
  Candidate query;
  // Relevant and irrelevant candidates in seeded shuffled order.
  std::vector<Candidate> pool;
  std::size_t relevant_position = 0;

  const Candidate& relevant() const { return pool.at(relevant_position); }
  std::vector<Candidate> irrelevant() const;
  // Throws when the pool has duplicate keys or the position is invalid.
  void validate() const;

  Json to_json() const;
  static BenchInstance from_json(const Json& obj);
  bool operator==(const BenchInstance&) const = default;
};

struct BenchmarkSuite {
  std::string dataset;
  TaskKind task = TaskKind::I2T;
  Language language = Language::EN;
  FormattingStyle style = FormattingStyle::Plain;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<BenchInstance> instances;

  bool operator==(const BenchmarkSuite&) const = default;
};

// Item indices of one pool in final order.
struct PoolLayout {
  std::vector<std::size_t> members;
  std::size_t relevant_position = 0;
};

// Draws n distinct items uniformly from [0, item_count) \ {relevant} with a
// SplitMix64 seeded by `stream`, then shuffles relevant + irrelevant with
// the same generator. build_pool passes stream_seed(seed, dataset, index).
PoolLayout sample_pool(std::size_t item_count, std::size_t relevant, std::size_t n, std::uint64_t stream);

BenchInstance build_pool(const Dataset& dataset, std::size_t index, TaskKind task, Language lang,
                         FormattingStyle style, std::size_t n, std::uint64_t seed);

struct SuiteSpec {
  std::string dataset;
  TaskKind task;
  Language language;
  std::size_t n;
};

// Suites implied by the manifests, in canonical (dataset, task, language)
// order. Throws when a manifest declares an unsupported combination.
std::vector<SuiteSpec> plan_benchmark(std::span<const DatasetManifest> manifests);

std::vector<BenchmarkSuite> build_benchmark(std::span<const Dataset> datasets, FormattingStyle style,
                                            std::uint64_t seed, std::size_t jobs = 1);

// Suite file: for each suite a header line {"suite": {...}} followed by
// one line per instance.
void write_suites(const std::filesystem::path& path, std::span<const BenchmarkSuite> suites,
                  const std::optional<Provenance>& provenance = std::nullopt);
std::vector<BenchmarkSuite> read_suites(const std::filesystem::path& path);

}  // namespace mmkd
