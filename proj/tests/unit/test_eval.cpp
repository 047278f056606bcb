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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmkd/eval.hpp"
#include "mmkd/random.hpp"
#include "test_util.hpp"

namespace mmkd {
namespace {

Candidate cand(std::string key) { return {std::move(key), "", std::nullopt}; }

BenchInstance instance(std::string id, std::vector<std::string> keys, std::size_t relevant) {
  BenchInstance inst;
  inst.id = std::move(id);
  inst.query = cand(inst.id + "#query");
  for (auto& k : keys) inst.pool.push_back(cand(std::move(k)));
  inst.relevant_position = relevant;
  return inst;
}

EvalRecord rec(TaskKind task, std::string dataset, Language lang, bool correct, std::string id,
               FormattingStyle style = FormattingStyle::Plain) {
  EvalRecord r;
  r.instance_id = std::move(id);
  r.task = task;
  r.dataset = std::move(dataset);
  r.language = lang;
  r.style = style;
  r.correct = correct;
  return r;
}

// Cell with `right` correct out of `total`.
void add_cell(std::vector<EvalRecord>& out, TaskKind task, const std::string& ds, Language lang, int right, int total) {
  for (int i = 0; i < total; ++i) {
    out.push_back(rec(task, ds, lang, i < right,
                      ds + "/" + std::string(to_string(task)) + "/" + std::string(to_string(lang)) + "/" +
                          std::to_string(i)));
  }
}

// Upper tail of chi-squared(1) by composite Simpson integration of the density.
double chi2_1_tail(double x) {
  const double hi = 200.0;
  const int n = 400000;
  const double h = (hi - x) / n;
  auto f = [](double t) { return std::exp(-t / 2) / std::sqrt(2 * std::numbers::pi * t); };
  double s = f(x) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(x + i * h);
  return s * h / 3;
}

TEST(Similarity, CosineExamples) {
  const std::vector<double> a{1, 1}, b{1, 0}, c{0, 1}, z{0, 0};
  EXPECT_NEAR(cosine(a, b), 0.70710678, 1e-8);
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-15);
  EXPECT_EQ(cosine(b, c), 0.0);
  EXPECT_THROW(cosine(a, z), ValidationError);
  const std::vector<double> d3{1, 2, 3};
  EXPECT_THROW(cosine(a, d3), ValidationError);
  EXPECT_EQ(dot(a, b), 1.0);
  EXPECT_EQ(parse_similarity("dot"), Similarity::Dot);
  EXPECT_THROW(parse_similarity("l2"), ValidationError);
}

TEST(Score, ForcedOrdering) {
  const PrecomputedEmbedder emb({{"i#query", {1, 0}}, {"r", {1, 0}}, {"o1", {0, 1}}, {"o2", {-1, 0}}});
  auto inst = instance("i", {"o1", "r", "o2"}, 1);
  const auto r = score_instance(inst, "D", FormattingStyle::Plain, emb);
  EXPECT_TRUE(r.correct);
  EXPECT_EQ(r.top_candidate_index, 1u);
  EXPECT_NEAR(r.score_of_relevant, 1.0, 1e-12);
  inst.relevant_position = 2;
  EXPECT_FALSE(score_instance(inst, "D", FormattingStyle::Plain, emb).correct);
}

TEST(Score, TiesGoToLowerPosition) {
  const PrecomputedEmbedder emb({{"i#query", {1, 2}}, {"a", {3, 1}}, {"b", {3, 1}}, {"c", {3, 1}}});
  const auto first = score_instance(instance("i", {"a", "b", "c"}, 0), "D", FormattingStyle::Plain, emb);
  EXPECT_TRUE(first.correct);
  const auto later = score_instance(instance("i", {"a", "b", "c"}, 2), "D", FormattingStyle::Plain, emb);
  EXPECT_FALSE(later.correct);
  EXPECT_EQ(later.top_candidate_index, 0u);
}

TEST(Score, MissingKeyNamesCandidate) {
  const PrecomputedEmbedder emb({{"i#query", {1, 0}}, {"a", {1, 0}}});
  try {
    score_instance(instance("i", {"a", "ghost"}, 0), "D", FormattingStyle::Plain, emb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

struct RandomSuite {
  BenchmarkSuite suite;
  std::map<std::string, EmbeddingVector> vectors;

  RandomSuite(std::size_t count, std::uint64_t seed) {
    SplitMix64 rng(seed);
    suite.dataset = "Fixture";
    suite.task = TaskKind::T2I;
    suite.language = Language::IT;
    suite.n = 9;
    auto vec = [&] {
      EmbeddingVector v(8);
      for (float& x : v) x = static_cast<float>(2 * rng.unit() - 1);
      return v;
    };
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<std::string> keys;
      for (int k = 0; k < 10; ++k) keys.push_back("c" + std::to_string(i) + "-" + std::to_string(k));
      auto inst = instance("q" + std::to_string(i), keys, rng.below(10));
      vectors[inst.query.key] = vec();
      // Pull the relevant candidate toward the query on about half the instances.
      for (const auto& c : inst.pool) vectors[c.key] = vec();
      if (rng.below(2)) {
        auto& r = vectors[inst.relevant().key];
        for (std::size_t j = 0; j < 8; ++j) r[j] = 0.3f * r[j] + vectors[inst.query.key][j];
      }
      suite.instances.push_back(std::move(inst));
    }
  }
};

TEST(Evaluate, MatchesBruteForceRescoring) {
  RandomSuite f(1000, 21);
  const PrecomputedEmbedder emb(f.vectors);
  const auto records = evaluate_suite(f.suite, emb, Similarity::Cosine, 4);
  ASSERT_EQ(records.size(), 1000u);
  std::size_t right = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& inst = f.suite.instances[i];
    const auto& q = f.vectors.at(inst.query.key);
    std::size_t best = 0;
    long double best_score = -2;
    for (std::size_t k = 0; k < inst.pool.size(); ++k) {
      const auto& c = f.vectors.at(inst.pool[k].key);
      long double d = 0, nq = 0, nc = 0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        d += (long double)q[j] * c[j];
        nq += (long double)q[j] * q[j];
        nc += (long double)c[j] * c[j];
      }
      const long double s = d / std::sqrt(nq * nc);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    EXPECT_EQ(records[i].top_candidate_index, best) << inst.id;
    EXPECT_EQ(records[i].correct, best == inst.relevant_position);
    EXPECT_EQ(records[i].instance_id, inst.id);
    right += best == inst.relevant_position;
  }
  EXPECT_DOUBLE_EQ(precision_at_1(records), right / 1000.0);
  EXPECT_GT(right, 400u);
  EXPECT_LT(right, 800u);
}

TEST(Evaluate, InvariantUnderPositiveScaling) {
  RandomSuite f(300, 22);
  const auto base = evaluate_suite(f.suite, PrecomputedEmbedder(f.vectors));
  for (float lambda : {0.25f, 8.0f}) {
    auto scaled = f.vectors;
    for (auto& [k, v] : scaled)
      for (float& x : v) x *= lambda;
    const auto again = evaluate_suite(f.suite, PrecomputedEmbedder(scaled));
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(again[i].correct, base[i].correct);
      EXPECT_EQ(again[i].top_candidate_index, base[i].top_candidate_index);
      EXPECT_NEAR(again[i].score_of_relevant, base[i].score_of_relevant, 1e-6);
    }
  }
}

TEST(PrecisionAt1, Examples) {
  std::vector<EvalRecord> r;
  add_cell(r, TaskKind::I2T, "D", Language::EN, 1, 4);
  EXPECT_EQ(precision_at_1(r), 0.25);
  EXPECT_EQ(format_percent(precision_at_1(r)), "25.00");
  std::vector<EvalRecord> all;
  add_cell(all, TaskKind::I2T, "D", Language::EN, 3, 3);
  EXPECT_EQ(format_percent(precision_at_1(all)), "100.00");
  EXPECT_EQ(format_percent(0.73454), "73.45");
  EXPECT_THROW(precision_at_1(std::vector<EvalRecord>{}), ValidationError);
}

TEST(Aggregate, SingleTask) {
  std::vector<EvalRecord> r;
  add_cell(r, TaskKind::VG, "F", Language::FR, 3, 8);
  const auto a = aggregate(r);
  EXPECT_EQ(a.per_task.at(TaskKind::VG), 3.0 / 8.0);
  EXPECT_FALSE(a.avg3.has_value());
  EXPECT_FALSE(a.avg.has_value());
}

TEST(Aggregate, HandComputedAverages) {
  std::vector<EvalRecord> r;
  add_cell(r, TaskKind::I2T, "A", Language::EN, 1, 10);
  add_cell(r, TaskKind::T2I, "A", Language::EN, 2, 10);
  add_cell(r, TaskKind::C, "B", Language::EN, 3, 10);
  auto a = aggregate(r);
  EXPECT_NEAR(*a.avg3, 0.20, 1e-15);
  EXPECT_EQ(format_percent(*a.avg3), "20.00");
  EXPECT_FALSE(a.avg.has_value());

  add_cell(r, TaskKind::VQA, "C", Language::EN, 4, 10);
  add_cell(r, TaskKind::VG, "D", Language::EN, 5, 10);
  // A second I2T cell with a different size: task value is the cell mean.
  add_cell(r, TaskKind::I2T, "A", Language::FR, 3, 5);
  a = aggregate(r);
  EXPECT_NEAR(a.per_task.at(TaskKind::I2T), (0.1 + 0.6) / 2, 1e-15);
  EXPECT_NEAR(*a.avg3, (0.35 + 0.2 + 0.3) / 3, 1e-15);
  EXPECT_NEAR(*a.avg, (0.35 + 0.2 + 0.3 + 0.4 + 0.5) / 5, 1e-15);

  const auto& en = a.per_language.at(Language::EN);
  EXPECT_NEAR(*en.avg3, 0.2, 1e-15);
  EXPECT_NEAR(*en.all, 0.3, 1e-15);
  const auto& fr = a.per_language.at(Language::FR);
  EXPECT_FALSE(fr.avg3.has_value());
  EXPECT_FALSE(fr.all.has_value());

  std::reverse(r.begin(), r.end());
  const auto b = aggregate(r);
  EXPECT_EQ(b.per_cell, a.per_cell);
  EXPECT_EQ(b.avg, a.avg);
}

TEST(Aggregate, AllOnlyForEnglishAndFrench) {
  std::vector<EvalRecord> r;
  for (Language l : kAllLanguages) {
    for (TaskKind t : {TaskKind::I2T, TaskKind::T2I, TaskKind::C, TaskKind::VQA, TaskKind::VG}) {
      add_cell(r, t, "X", l, 1, 2);
    }
  }
  const auto a = aggregate(r);
  for (Language l : kAllLanguages) {
    const auto& s = a.per_language.at(l);
    EXPECT_NEAR(*s.avg3, 0.5, 1e-15);
    EXPECT_EQ(s.all.has_value(), l == Language::EN || l == Language::FR);
  }
  const std::string table = render_table({{"model", a}});
  EXPECT_NE(table.find("50.00"), std::string::npos);
  std::vector<EvalRecord> partial;
  add_cell(partial, TaskKind::VG, "X", Language::EN, 1, 2);
  EXPECT_NE(render_table({{"m", aggregate(partial)}}).find('X'), std::string::npos);
}

TEST(McNemar, ChiSquaredBranch) {
  const auto r = mcnemar({100, 15, 10, 50});
  EXPECT_EQ(r.method, TestMethod::ChiSquaredCC);
  EXPECT_NEAR(*r.statistic, 0.64, 1e-15);
  const double oracle = chi2_1_tail(0.64);
  EXPECT_NEAR(oracle, 0.4237, 1e-3);
  EXPECT_NEAR(r.p_value, oracle, 1e-6);
}

TEST(McNemar, ExactBranch) {
  const auto r = mcnemar({0, 1, 9, 0});
  EXPECT_EQ(r.method, TestMethod::ExactBinomial);
  EXPECT_DOUBLE_EQ(r.p_value, 22.0 / 1024.0);
  EXPECT_EQ(mcnemar({5, 1, 0, 5}).p_value, 1.0);
  EXPECT_EQ(mcnemar({0, 6, 6, 0}).p_value, 1.0);
}

TEST(McNemar, BoundaryAndSymmetry) {
  EXPECT_EQ(mcnemar({0, 12, 12, 0}).method, TestMethod::ExactBinomial);
  EXPECT_EQ(mcnemar({0, 13, 12, 0}).method, TestMethod::ChiSquaredCC);
  EXPECT_EQ(mcnemar({0, 24, 0, 0}).method, TestMethod::ExactBinomial);
  EXPECT_EQ(mcnemar({0, 25, 0, 0}).method, TestMethod::ChiSquaredCC);
  EXPECT_NEAR(*mcnemar({0, 20, 20, 0}).statistic, 1.0 / 40, 1e-15);
  for (std::size_t b = 0; b < 40; ++b) {
    for (std::size_t c = 0; c < 40; ++c) {
      if (b + c == 0) continue;
      const auto x = mcnemar({3, b, c, 4});
      const auto y = mcnemar({3, c, b, 4});
      EXPECT_EQ(x.p_value, y.p_value);
      EXPECT_EQ(x.method, b + c >= 25 ? TestMethod::ChiSquaredCC : TestMethod::ExactBinomial);
      EXPECT_GE(x.p_value, 0.0);
      EXPECT_LE(x.p_value, 1.0);
    }
  }
  try {
    mcnemar({5, 0, 0, 5});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no discordant pairs"), std::string::npos);
  }
}

// Benchmark-shaped records: 29 (task, dataset, language) cells in two styles.
std::vector<EvalRecord> benchmark_records(std::uint64_t seed) {
  std::vector<std::tuple<TaskKind, std::string, Language>> cells;
  for (const char* ds : {"Crossmodal-3600", "XTD10"})
    for (TaskKind t : {TaskKind::I2T, TaskKind::T2I})
      for (Language l : kAllLanguages) cells.emplace_back(t, ds, l);
  for (Language l : kAllLanguages) cells.emplace_back(TaskKind::C, "ImageNet-1k", l);
  for (Language l : {Language::EN, Language::FR}) {
    cells.emplace_back(TaskKind::VQA, "MaXM", l);
    cells.emplace_back(TaskKind::VG, "Flickr30k-Entities", l);
  }
  SplitMix64 rng(seed);
  std::vector<EvalRecord> out;
  for (FormattingStyle s : {FormattingStyle::Plain, FormattingStyle::Punctuation}) {
    for (const auto& [t, ds, l] : cells) {
      for (int i = 0; i < 20; ++i) {
        out.push_back(rec(t, ds, l, rng.below(2),
                          ds + "/" + std::string(to_string(t)) + "/" + std::string(to_string(l)) + "/" + std::to_string(i), s));
      }
    }
  }
  return out;
}

TEST(Compare, FiftyEightCells) {
  const auto a = benchmark_records(1);
  const auto b = benchmark_records(2);
  const auto report = compare_models(a, b, 0.05);
  EXPECT_EQ(report.cells.size(), 58u);
  std::size_t sig = 0;
  for (const auto& c : report.cells) {
    EXPECT_EQ(c.table.total(), 20u);
    sig += c.significant;
    if (c.result) EXPECT_EQ(c.significant, c.result->p_value < 0.05);
  }
  EXPECT_EQ(sig, report.significant_count);
  EXPECT_NE(report.render().find("58"), std::string::npos);
}

TEST(Compare, IdenticalModelsAndOneFlip) {
  const auto a = benchmark_records(1);
  const auto same = compare_models(a, a);
  for (const auto& c : same.cells) {
    EXPECT_FALSE(c.result.has_value());
    EXPECT_FALSE(c.significant);
    EXPECT_NE(c.note.find("no discordant pairs"), std::string::npos);
  }
  EXPECT_EQ(same.significant_count, 0u);

  auto b = a;
  b[7].correct = !b[7].correct;
  const auto flip = compare_models(a, b);
  std::size_t tested = 0;
  for (const auto& c : flip.cells) {
    if (!c.result) continue;
    ++tested;
    EXPECT_EQ(c.result->method, TestMethod::ExactBinomial);
    EXPECT_EQ(c.result->p_value, 1.0);
    EXPECT_EQ(c.table.b + c.table.c, 1u);
  }
  EXPECT_EQ(tested, 1u);
}

TEST(Compare, MismatchedIdsRejected) {
  auto a = benchmark_records(1);
  auto b = a;
  b.pop_back();
  EXPECT_THROW(compare_models(a, b), ValidationError);
  b = a;
  b[0].instance_id += "x";
  EXPECT_THROW(compare_models(a, b), ValidationError);
}

TEST(Records, RoundTrip) {
  testing::TempDir dir;
  auto r = benchmark_records(3);
  r[0].score_of_relevant = 0.1 + 0.2;
  r[1].top_candidate_index = 41;
  write_eval_records(dir / "r.jsonl", r, Provenance{"eval", Json::object()});
  EXPECT_EQ(read_eval_records(dir / "r.jsonl"), r);
}

}  // namespace
}  // namespace mmkd
