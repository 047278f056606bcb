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

// Scoring of benchmark suites: similarity ranking, P@1, task and language
// averages, and McNemar's paired test between two models.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mmkd/bench_builder.hpp"
#include "mmkd/common.hpp"
#include "mmkd/encoder.hpp"

namespace mmkd {

enum class Similarity { Cosine, Dot };

std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view s);

// a.b / (|a| |b|); throws on a dimension mismatch or a zero-norm vector.
double cosine(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double similarity(Similarity kind, std::span<const double> a, std::span<const double> b);

struct EvalRecord {
  std::string instance_id;
  TaskKind task = TaskKind::I2T;
  std::string dataset;
  Language language = Language::EN;
  FormattingStyle style = FormattingStyle::Plain;
  bool correct = false;
  std::size_t top_candidate_index = 0;
  double score_of_relevant = 0.0;

  Json to_json() const;
  static EvalRecord from_json(const Json& obj);
  bool operator==(const EvalRecord&) const = default;
};

// Embeds the query and every candidate, ranks by descending similarity and
// breaks ties by ascending pool position.
EvalRecord score_instance(const BenchInstance& inst, const std::string& dataset, FormattingStyle style,
                          const Embedder& embedder, Similarity sim = Similarity::Cosine);

std::vector<EvalRecord> evaluate_suite(const BenchmarkSuite& suite, const Embedder& embedder,
                                       Similarity sim = Similarity::Cosine, std::size_t jobs = 1);

// Fraction of correct records in [0, 1]; throws on an empty list.
double precision_at_1(std::span<const EvalRecord> records);
// "73.45" style rendering of a fraction as a percentage.
std::string format_percent(double fraction);

using CellKey = std::tuple<TaskKind, std::string, Language, FormattingStyle>;

struct LanguageSummary {
  std::map<TaskKind, double> per_task;
  std::optional<double> avg3;
  // Only reported for EN and FR, the languages that have all five tasks.
  std::optional<double> all;
};

// All values are fractions in [0, 1].
struct AggregateReport {
  std::map<CellKey, double> per_cell;
  std::map<TaskKind, double> per_task;
  std::optional<double> avg3;
  std::optional<double> avg;
  std::map<Language, LanguageSummary> per_language;

  Json to_json() const;
};

AggregateReport aggregate(std::span<const EvalRecord> records);

// Model x task table with AVG-3 and AVG columns; "X" marks absent values.
std::string render_table(const std::vector<std::pair<std::string, AggregateReport>>& models);
// Language x (AVG-3, ALL) table for one model.
std::string render_language_table(const AggregateReport& report);

struct ContingencyTable {
  std::size_t a = 0;  // both correct
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  std::size_t d = 0;  // both wrong

  std::size_t total() const { return a + b + c + d; }
  bool operator==(const ContingencyTable&) const = default;
};

enum class TestMethod { ChiSquaredCC, ExactBinomial };
std::string_view to_string(TestMethod m);

struct SignificanceResult {
  TestMethod method = TestMethod::ExactBinomial;
  std::optional<double> statistic;
  double p_value = 1.0;
};

// Chi-squared with continuity correction when b + c >= 25 (upper tail of
// chi-squared(1) via std::erfc), exact two-sided binomial otherwise.
// Throws ValidationError("no discordant pairs") when b + c == 0.
SignificanceResult mcnemar(const ContingencyTable& table);

struct CellComparison {
  CellKey cell;
  ContingencyTable table;
  std::optional<SignificanceResult> result;
  std::string note;
  bool significant = false;

  Json to_json() const;
};

struct ComparisonReport {
  double alpha = 0.05;
  std::vector<CellComparison> cells;
  std::size_t significant_count = 0;

  std::string render() const;
};

// Pairs records by (instance id, style) and runs one test per
// (task, dataset, language, style) cell. Throws when the id sets differ.
ComparisonReport compare_models(std::span<const EvalRecord> a, std::span<const EvalRecord> b, double alpha = 0.05);

void write_eval_records(const std::filesystem::path& path, std::span<const EvalRecord> records,
                        const std::optional<Provenance>& provenance = std::nullopt);
std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path);

void write_comparison(const std::filesystem::path& path, const ComparisonReport& report,
                      const std::optional<Provenance>& provenance = std::nullopt);

}  // namespace mmkd
