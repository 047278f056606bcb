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

#include "mmkd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mmkd/parallel.hpp"

namespace mmkd {
namespace {

using Lookup = std::function<const std::vector<double>&(const Candidate&)>;

EncodeItem item_for(const Candidate& c) { return EncodeItem{c.key, c.text, c.image_ref}; }

std::vector<double> embed_or_throw(const Embedder& embedder, const Candidate& c) {
  try {
    return embedder.embed(item_for(c));
  } catch (const std::exception& e) {
    throw ValidationError("cannot encode '" + c.key + "': " + e.what());
  }
}

EvalRecord score_with(const BenchInstance& inst, const std::string& dataset, FormattingStyle style,
                      const Lookup& lookup, Similarity sim) {
  inst.validate();
  const std::vector<double>& q = lookup(inst.query);
  EvalRecord rec;
  rec.instance_id = inst.id;
  rec.task = inst.task;
  rec.dataset = dataset;
  rec.language = inst.language;
  rec.style = style;

  double best = 0.0;
  for (std::size_t i = 0; i < inst.pool.size(); ++i) {
    double s;
    try {
      s = similarity(sim, q, lookup(inst.pool[i]));
    } catch (const ValidationError& e) {
      throw ValidationError("candidate '" + inst.pool[i].key + "': " + e.what());
    }
    // Strict comparison keeps the earliest position on ties.
    if (i == 0 || s > best) {
      best = s;
      rec.top_candidate_index = i;
    }
    if (i == inst.relevant_position) rec.score_of_relevant = s;
  }
  rec.correct = rec.top_candidate_index == inst.relevant_position;
  return rec;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

constexpr TaskKind kAvg3Tasks[] = {TaskKind::I2T, TaskKind::T2I, TaskKind::C};

std::optional<double> mean_of(const std::map<TaskKind, double>& per_task, std::span<const TaskKind> tasks) {
  std::vector<double> vals;
  for (TaskKind t : tasks) {
    auto it = per_task.find(t);
    if (it == per_task.end()) return std::nullopt;
    vals.push_back(it->second);
  }
  return mean(vals);
}

std::string cell_or_x(const std::optional<double>& v) { return v ? format_percent(*v) : std::string("X"); }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// C(n, k) is exact in a double for n < 25.
double binomial_coefficient(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

Json cell_json(const CellKey& key) {
  return Json{{"task", std::string(to_string(std::get<0>(key)))},
              {"dataset", std::get<1>(key)},
              {"language", std::string(to_string(std::get<2>(key)))},
              {"style", std::string(to_string(std::get<3>(key)))}};
}

CellKey cell_of(const EvalRecord& r) { return {r.task, r.dataset, r.language, r.style}; }

}  // namespace

std::string_view to_string(Similarity s) { return s == Similarity::Cosine ? "cosine" : "dot"; }

Similarity parse_similarity(std::string_view s) {
  if (s == "cosine") return Similarity::Cosine;
  if (s == "dot") return Similarity::Dot;
  throw ValidationError("unknown similarity '" + std::string(s) + "' (expected cosine or dot)");
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double ab = dot(a, b);
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine of a zero-norm vector");
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

double similarity(Similarity kind, std::span<const double> a, std::span<const double> b) {
  return kind == Similarity::Cosine ? cosine(a, b) : dot(a, b);
}

// ---------------------------------------------------------------------------
// Records

Json EvalRecord::to_json() const {
  return Json{{"instance_id", instance_id},
              {"task", std::string(to_string(task))},
              {"dataset", dataset},
              {"language", std::string(to_string(language))},
              {"style", std::string(to_string(style))},
              {"correct", correct},
              {"top_candidate_index", top_candidate_index},
              {"score_of_relevant", score_of_relevant}};
}

EvalRecord EvalRecord::from_json(const Json& obj) {
  EvalRecord r;
  r.instance_id = require_string(obj, "instance_id");
  r.task = parse_task_kind(require_string(obj, "task"));
  r.dataset = require_string(obj, "dataset");
  r.language = parse_language(require_string(obj, "language"));
  r.style = parse_style(require_string(obj, "style"));
  r.correct = require_field(obj, "correct").get<bool>();
  r.top_candidate_index = require_field(obj, "top_candidate_index").get<std::size_t>();
  r.score_of_relevant = require_field(obj, "score_of_relevant").get<double>();
  return r;
}

EvalRecord score_instance(const BenchInstance& inst, const std::string& dataset, FormattingStyle style,
                          const Embedder& embedder, Similarity sim) {
  std::unordered_map<std::string, std::vector<double>> cache;
  Lookup lookup = [&](const Candidate& c) -> const std::vector<double>& {
    auto it = cache.find(c.key);
    if (it == cache.end()) it = cache.emplace(c.key, embed_or_throw(embedder, c)).first;
    return it->second;
  };
  return score_with(inst, dataset, style, lookup, sim);
}

std::vector<EvalRecord> evaluate_suite(const BenchmarkSuite& suite, const Embedder& embedder, Similarity sim,
                                       std::size_t jobs) {
  // Candidates recur across pools; embed each key once.
  std::vector<const Candidate*> unique;
  std::unordered_map<std::string, std::size_t> index;
  auto note = [&](const Candidate& c) {
    if (index.emplace(c.key, unique.size()).second) unique.push_back(&c);
  };
  for (const auto& inst : suite.instances) {
    note(inst.query);
    for (const auto& c : inst.pool) note(c);
  }
  std::vector<std::vector<double>> vectors(unique.size());
  parallel_for(unique.size(), jobs, [&](std::size_t i) { vectors[i] = embed_or_throw(embedder, *unique[i]); });

  Lookup lookup = [&](const Candidate& c) -> const std::vector<double>& { return vectors[index.at(c.key)]; };
  std::vector<EvalRecord> out(suite.instances.size());
  parallel_for(suite.instances.size(), jobs, [&](std::size_t i) {
    out[i] = score_with(suite.instances[i], suite.dataset, suite.style, lookup, sim);
  });
  return out;
}

double precision_at_1(std::span<const EvalRecord> records) {
  if (records.empty()) throw ValidationError("P@1 of an empty record list");
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.correct;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------
// Aggregation

AggregateReport aggregate(std::span<const EvalRecord> records) {
  if (records.empty()) throw ValidationError("nothing to aggregate");
  std::map<CellKey, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) {
    auto& [hits, total] = counts[cell_of(r)];
    hits += r.correct;
    ++total;
  }
  AggregateReport rep;
  std::map<TaskKind, std::vector<double>> by_task;
  std::map<Language, std::map<TaskKind, std::vector<double>>> by_lang;
  for (const auto& [key, ht] : counts) {
    const double p = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    rep.per_cell[key] = p;
    by_task[std::get<0>(key)].push_back(p);
    by_lang[std::get<2>(key)][std::get<0>(key)].push_back(p);
  }
  for (const auto& [task, vals] : by_task) rep.per_task[task] = mean(vals);
  rep.avg3 = mean_of(rep.per_task, kAvg3Tasks);
  rep.avg = mean_of(rep.per_task, kAllTasks);
  for (const auto& [lang, tasks] : by_lang) {
    LanguageSummary& s = rep.per_language[lang];
    for (const auto& [task, vals] : tasks) s.per_task[task] = mean(vals);
    s.avg3 = mean_of(s.per_task, kAvg3Tasks);
    if (lang == Language::EN || lang == Language::FR) s.all = mean_of(s.per_task, kAllTasks);
  }
  return rep;
}

Json AggregateReport::to_json() const {
  Json tasks = Json::object();
  for (const auto& [t, v] : per_task) tasks[std::string(to_string(t))] = v;
  Json langs = Json::object();
  for (const auto& [l, s] : per_language) {
    Json lt = Json::object();
    for (const auto& [t, v] : s.per_task) lt[std::string(to_string(t))] = v;
    Json entry{{"per_task", lt}, {"avg3", s.avg3 ? Json(*s.avg3) : Json(nullptr)}};
    if (l == Language::EN || l == Language::FR) entry["all"] = s.all ? Json(*s.all) : Json(nullptr);
    langs[std::string(to_string(l))] = std::move(entry);
  }
  Json cells = Json::array();
  for (const auto& [k, v] : per_cell) {
    Json c = cell_json(k);
    c["p_at_1"] = v;
    cells.push_back(std::move(c));
  }
  return Json{{"per_task", tasks},
              {"avg3", avg3 ? Json(*avg3) : Json(nullptr)},
              {"avg", avg ? Json(*avg) : Json(nullptr)},
              {"per_language", langs},
              {"cells", cells}};
}

std::string render_table(const std::vector<std::pair<std::string, AggregateReport>>& models) {
  std::size_t name_w = 5;
  for (const auto& [name, _] : models) name_w = std::max(name_w, name.size());
  std::ostringstream out;
  out << std::string(name_w, ' ');
  for (TaskKind t : kAllTasks) out << ' ' << pad(std::string(to_string(t)), 7);
  out << ' ' << pad("AVG-3", 7) << ' ' << pad("AVG", 7) << '\n';
  for (const auto& [name, rep] : models) {
    out << name << std::string(name_w - name.size(), ' ');
    for (TaskKind t : kAllTasks) {
      auto it = rep.per_task.find(t);
      out << ' ' << pad(it == rep.per_task.end() ? "X" : format_percent(it->second), 7);
    }
    out << ' ' << pad(cell_or_x(rep.avg3), 7) << ' ' << pad(cell_or_x(rep.avg), 7) << '\n';
  }
  return out.str();
}

std::string render_language_table(const AggregateReport& report) {
  std::ostringstream out;
  out << "lang " << pad("AVG-3", 7) << ' ' << pad("ALL", 7) << '\n';
  for (Language l : kAllLanguages) {
    auto it = report.per_language.find(l);
    if (it == report.per_language.end()) continue;
    const bool all_reported = l == Language::EN || l == Language::FR;
    out << pad(std::string(to_string(l)), 4) << ' ' << pad(cell_or_x(it->second.avg3), 7) << ' '
        << pad(all_reported ? cell_or_x(it->second.all) : std::string("-"), 7) << '\n';
  }
  out << "(ALL covers all five tasks and is reported for EN and FR only)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Significance

std::string_view to_string(TestMethod m) {
  return m == TestMethod::ChiSquaredCC ? "chi_squared_cc" : "exact_binomial";
}

SignificanceResult mcnemar(const ContingencyTable& table) {
  const std::size_t n = table.b + table.c;
  if (n == 0) throw ValidationError("no discordant pairs");
  SignificanceResult r;
  if (n >= 25) {
    const double diff = std::fabs(static_cast<double>(table.b) - static_cast<double>(table.c)) - 1.0;
    const double x = diff * diff / static_cast<double>(n);
    r.method = TestMethod::ChiSquaredCC;
    r.statistic = x;
    r.p_value = std::erfc(std::sqrt(x / 2.0));
    return r;
  }
  const std::size_t k = std::min(table.b, table.c);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) tail += binomial_coefficient(n, i);
  r.method = TestMethod::ExactBinomial;
  r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  return r;
}

Json CellComparison::to_json() const {
  Json obj = cell_json(cell);
  obj["a"] = table.a;
  obj["b"] = table.b;
  obj["c"] = table.c;
  obj["d"] = table.d;
  if (result) {
    obj["method"] = std::string(to_string(result->method));
    obj["statistic"] = result->statistic ? Json(*result->statistic) : Json(nullptr);
    obj["p_value"] = result->p_value;
  } else {
    obj["method"] = nullptr;
    obj["p_value"] = nullptr;
  }
  if (!note.empty()) obj["note"] = note;
  obj["significant"] = significant;
  return obj;
}

ComparisonReport compare_models(std::span<const EvalRecord> a, std::span<const EvalRecord> b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  using Id = std::pair<std::string, FormattingStyle>;
  std::map<Id, const EvalRecord*> index_b;
  for (const auto& r : b) {
    if (!index_b.emplace(Id{r.instance_id, r.style}, &r).second) {
      throw ValidationError("duplicate record '" + r.instance_id + "' in model B");
    }
  }
  std::set<Id> seen_a;
  std::map<CellKey, ContingencyTable> tables;
  for (const auto& r : a) {
    const Id id{r.instance_id, r.style};
    if (!seen_a.insert(id).second) throw ValidationError("duplicate record '" + r.instance_id + "' in model A");
    auto it = index_b.find(id);
    if (it == index_b.end()) throw ValidationError("record '" + r.instance_id + "' is missing from model B");
    const EvalRecord& rb = *it->second;
    if (cell_of(r) != cell_of(rb)) throw ValidationError("record '" + r.instance_id + "' differs in task/dataset/language");
    ContingencyTable& t = tables[cell_of(r)];
    if (r.correct && rb.correct) ++t.a;
    else if (r.correct) ++t.b;
    else if (rb.correct) ++t.c;
    else ++t.d;
  }
  if (seen_a.size() != index_b.size()) throw ValidationError("model B has records missing from model A");

  ComparisonReport rep;
  rep.alpha = alpha;
  for (const auto& [key, table] : tables) {
    CellComparison cc;
    cc.cell = key;
    cc.table = table;
    try {
      cc.result = mcnemar(table);
      cc.significant = cc.result->p_value < alpha;
    } catch (const ValidationError& e) {
      cc.note = e.what();
    }
    rep.significant_count += cc.significant;
    rep.cells.push_back(std::move(cc));
  }
  return rep;
}

std::string ComparisonReport::render() const {
  std::ostringstream out;
  char buf[64];
  for (const auto& c : cells) {
    const auto& [task, dataset, lang, style] = c.cell;
    out << to_string(task) << ' ' << dataset << ' ' << to_string(lang) << ' ' << to_string(style) << "  b=" << c.table.b
        << " c=" << c.table.c << "  ";
    if (c.result) {
      std::snprintf(buf, sizeof buf, "p=%.6f", c.result->p_value);
      out << to_string(c.result->method) << ' ' << buf << (c.significant ? " *" : "");
    } else {
      out << c.note;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "%g", alpha);
  out << significant_count << " of " << cells.size() << " cells significant at alpha=" << buf << '\n';
  return out.str();
}

void write_eval_records(const std::filesystem::path& path, std::span<const EvalRecord> records,
                        const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& r : records) w.write(r.to_json());
  w.close();
}

std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path) {
  std::vector<EvalRecord> out;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    if (obj.contains("summary")) return;
    out.push_back(EvalRecord::from_json(obj));
  });
  return out;
}

void write_comparison(const std::filesystem::path& path, const ComparisonReport& report,
                      const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& c : report.cells) w.write(c.to_json());
  w.write(Json{{"summary",
                {{"alpha", report.alpha}, {"cells", report.cells.size()}, {"significant", report.significant_count}}}});
  w.close();
}

}  // namespace mmkd
