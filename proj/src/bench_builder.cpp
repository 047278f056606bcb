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

#include "mmkd/bench_builder.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "mmkd/parallel.hpp"
#include "mmkd/random.hpp"

namespace mmkd {
namespace {

constexpr std::string_view kQueryVar = "{query_text}";
constexpr std::string_view kTargetVar = "{target_text}";

struct TemplateRow {
  TaskKind task;
  Language lang;
  std::string_view query;   // empty = unavailable
  std::string_view target;  // empty = unavailable
};

// clang-format off
constexpr TemplateRow kTemplates[] = {
  // English
  {TaskKind::I2T, Language::EN, "<|image_1|>\nFind an image caption describing the given everyday image", "{target_text}"},
  {TaskKind::T2I, Language::EN, "Find me an everyday image that matches the given caption: {query_text}", "<|image_1|>\nRepresent the given image"},
  {TaskKind::VQA, Language::EN, "<|image_1|>\nRepresent the given image with the following question: {query_text}", "Represent the given image with the following question: {target_text}"},
  {TaskKind::VG,  Language::EN, "<|image_1|>\nSelect the portion of the image that isolates the object labeled as \"{query_text}\"", "Select the portion of the image that isolates the object labeled as \"{target_text}\""},
  {TaskKind::C,   Language::EN, "<|image_1|>\nRepresent the given image for classification", "{target_text}"},
  // French
  {TaskKind::I2T, Language::FR, "<|image_1|>\nTrouvez une légende décrivant l'image donnée", "{target_text}"},
  {TaskKind::T2I, Language::FR, "Trouvez-moi une image de tous les jours qui correspond à la légende donnée: {query_text}", "<|image_1|>\nReprésentez l'image donnée"},
  {TaskKind::VQA, Language::FR, "<|image_1|>\nReprésentez l'image donnée avec la question suivante: {query_text}", "{target_text}"},
  {TaskKind::VG,  Language::FR, "<|image_1|>\nSélectionnez la partie de l'image qui isole l'objet étiqueté comme \"{query_text}\"", "<|image_1|>\nReprésentez l'image recadrée donnée de l'objet"},
  {TaskKind::C,   Language::FR, "<|image_1|>\nReprésentez l'image donnée pour la classification", "{target_text}"},
  // German
  {TaskKind::I2T, Language::DE, "<|image_1|>\nFinde eine Bildunterschrift, die das gegebene Alltagsbild beschreibt", "{target_text}"},
  {TaskKind::T2I, Language::DE, "Finde mir ein alltägliches Bild, das der gegebenen Beschriftung entspricht: {query_text}", "<|image_1|>\nStelle das gegebene Bild dar"},
  {TaskKind::VQA, Language::DE, "", ""},
  {TaskKind::VG,  Language::DE, "", ""},
  {TaskKind::C,   Language::DE, "<|image_1|>\nStellen Sie das gegebene Bild für die Klassifizierung dar", "{target_text}"},
  // Italian
  {TaskKind::I2T, Language::IT, "<|image_1|>\nTrova una didascalia che descriva l'immagine di tutti i giorni", "{target_text}"},
  {TaskKind::T2I, Language::IT, "Trovami un'immagine di tutti i giorni che corrisponda alla didascalia data: {query_text}", "<|image_1|>\nRappresenta l'immagine data"},
  {TaskKind::VQA, Language::IT, "", ""},
  {TaskKind::VG,  Language::IT, "", ""},
  {TaskKind::C,   Language::IT, "<|image_1|>\nRappresenta l'immagine data per la classificazione", "{target_text}"},
  // Spanish
  {TaskKind::I2T, Language::ES, "<|image_1|>\nEncuentra una leyenda que describa la imagen cotidiana dada", "{target_text}"},
  {TaskKind::T2I, Language::ES, "Encuentra una imagen cotidiana que coincida con la leyenda dada: {query_text}", "<|image_1|>\nRepresenta la imagen dada"},
  {TaskKind::VQA, Language::ES, "", ""},
  {TaskKind::VG,  Language::ES, "", ""},
  {TaskKind::C,   Language::ES, "<|image_1|>\nRepresenta la imagen dada para clasificación", "{target_text}"},
};
// clang-format on

const TemplateRow& lookup(TaskKind task, Language lang) {
  for (const auto& row : kTemplates) {
    if (row.task == task && row.lang == lang) return row;
  }
  throw Error("template table is incomplete");
}

[[noreturn]] void unsupported(TaskKind task, Language lang) {
  throw ValidationError("no " + std::string(to_string(task)) + " templates for " +
                        std::string(to_string(lang)) + " (task unavailable in that language)");
}

std::string substitute(std::string_view tmpl, std::string_view var, std::string_view value) {
  std::string out(tmpl);
  if (auto pos = out.find(var); pos != std::string::npos) out.replace(pos, var.size(), value);
  return out;
}

bool has_placeholder(std::string_view text) { return text.find(kImagePlaceholder) != std::string_view::npos; }

const std::string& first_text(const std::map<Language, std::vector<std::string>>& texts, Language lang,
                              const DatasetRecord& rec, const char* field) {
  auto it = texts.find(lang);
  if (it == texts.end() || it->second.empty()) {
    throw ValidationError("record '" + rec.id + "' has no " + field + " for " + std::string(to_string(lang)));
  }
  return it->second.front();
}

const std::string& require_ref(const std::optional<std::string>& ref, const DatasetRecord& rec, const char* field) {
  if (!ref) throw ValidationError("record '" + rec.id + "' lacks " + field);
  return *ref;
}

std::string suite_prefix(const std::string& dataset, TaskKind task, Language lang) {
  return dataset + "/" + std::string(to_string(task)) + "/" + std::string(to_string(lang)) + "/";
}

// Candidate for item `k` of the pool's universe.
Candidate make_candidate(const Dataset& ds, std::size_t k, TaskKind task, Language lang, FormattingStyle style,
                         const std::string& prefix) {
  Candidate c;
  if (task == TaskKind::C) {
    const auto& classes = *ds.manifest.class_set;
    auto names = ds.manifest.class_names.find(lang);
    const std::string& name = names != ds.manifest.class_names.end() ? names->second[k] : classes[k];
    c.key = prefix + "class:" + classes[k] + "#target";
    c.text = format_target(name, task, lang, style);
    return c;
  }
  const DatasetRecord& rec = ds.records[k];
  c.key = prefix + rec.id + "#target";
  switch (task) {
    case TaskKind::I2T:
      c.text = format_target(first_text(rec.text, lang, rec, "text"), task, lang, style);
      break;
    case TaskKind::T2I:
      c.text = format_target("", task, lang, style);
      c.image_ref = require_ref(rec.image_ref, rec, "image_ref");
      break;
    case TaskKind::VQA:
      c.text = format_target(first_text(rec.answer, lang, rec, "answer"), task, lang, style);
      break;
    case TaskKind::VG: {
      const std::string label = rec.text.count(lang) ? first_text(rec.text, lang, rec, "text") : std::string();
      c.text = format_target(label, task, lang, style);
      if (has_placeholder(c.text)) c.image_ref = require_ref(rec.crop_ref, rec, "crop_ref");
      break;
    }
    case TaskKind::C: break;
  }
  return c;
}

Candidate make_query(const DatasetRecord& rec, TaskKind task, Language lang, FormattingStyle style) {
  Candidate q;
  switch (task) {
    case TaskKind::I2T:
    case TaskKind::C:
      q.text = format_query("", task, lang, style);
      break;
    case TaskKind::T2I:
    case TaskKind::VQA:
    case TaskKind::VG:
      q.text = format_query(first_text(rec.text, lang, rec, "text"), task, lang, style);
      break;
  }
  if (has_placeholder(q.text)) q.image_ref = require_ref(rec.image_ref, rec, "image_ref");
  return q;
}

std::size_t class_index(const DatasetManifest& m, const DatasetRecord& rec) {
  if (!rec.label) throw ValidationError("record '" + rec.id + "' lacks label");
  const auto& classes = *m.class_set;
  auto it = std::find(classes.begin(), classes.end(), *rec.label);
  if (it == classes.end()) {
    throw ValidationError("record '" + rec.id + "' label '" + *rec.label + "' is not in the class set");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

Json candidate_json(const Candidate& c) { return c.to_json(); }

}  // namespace

// ---------------------------------------------------------------------------
// Pool sizes and templates

std::size_t pool_size(std::size_t cardinality, TaskKind task, std::optional<std::size_t> class_count) {
  if (task == TaskKind::C) {
    if (!class_count) throw ValidationError("classification pool size needs the class count");
    if (*class_count < 2) throw ValidationError("classification needs at least 2 classes");
    return *class_count - 1;
  }
  if (cardinality == 0) throw ValidationError("cardinality must be positive");
  return cardinality >= 1000 ? 999 : 99;
}

bool is_supported(TaskKind task, Language lang) {
  const auto& row = lookup(task, lang);
  return !row.query.empty() && !row.target.empty();
}

std::string_view query_template(TaskKind task, Language lang) {
  const auto& row = lookup(task, lang);
  if (row.query.empty()) unsupported(task, lang);
  return row.query;
}

std::string_view target_template(TaskKind task, Language lang) {
  const auto& row = lookup(task, lang);
  if (row.target.empty()) unsupported(task, lang);
  return row.target;
}

std::string apply_style(std::string text, FormattingStyle style, char mark) {
  if (!text.empty()) {
    const char last = text.back();
    if (last == '.' || last == '!' || last == '?' || last == ':') text.pop_back();
  }
  if (style == FormattingStyle::Punctuation) text += mark;
  return text;
}

std::string format_query(std::string_view query_text, TaskKind task, Language lang, FormattingStyle style) {
  return apply_style(substitute(query_template(task, lang), kQueryVar, query_text), style,
                     task == TaskKind::VQA ? '?' : '.');
}

std::string format_target(std::string_view target_text, TaskKind task, Language lang, FormattingStyle style) {
  return apply_style(substitute(target_template(task, lang), kTargetVar, target_text), style, '.');
}

// ---------------------------------------------------------------------------
// Instances

Json Candidate::to_json() const {
  Json obj{{"key", key}, {"text", text}};
  if (image_ref) obj["image_ref"] = *image_ref;
  return obj;
}

Candidate Candidate::from_json(const Json& obj) {
  Candidate c;
  c.key = require_string(obj, "key");
  c.text = require_string(obj, "text");
  c.image_ref = optional_string(obj, "image_ref");
  return c;
}

std::vector<Candidate> BenchInstance::irrelevant() const {
  std::vector<Candidate> out;
  out.reserve(pool.size() ? pool.size() - 1 : 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i != relevant_position) out.push_back(pool[i]);
  }
  return out;
}

void BenchInstance::validate() const {
  if (pool.empty() || relevant_position >= pool.size()) {
    throw ValidationError("instance '" + id + "' has no valid relevant candidate");
  }
  std::set<std::string_view> keys;
  for (const auto& c : pool) {
    if (!keys.insert(c.key).second) throw ValidationError("instance '" + id + "' has duplicate candidate '" + c.key + "'");
  }
}

Json BenchInstance::to_json() const {
  Json pool_json = Json::array();
  for (const auto& c : pool) pool_json.push_back(candidate_json(c));
  return Json{{"id", id},
              {"task", std::string(to_string(task))},
              {"language", std::string(to_string(language))},
              {"query", query.to_json()},
              {"pool", std::move(pool_json)},
              {"relevant_position", relevant_position}};
}

BenchInstance BenchInstance::from_json(const Json& obj) {
  BenchInstance inst;
  inst.id = require_string(obj, "id");
  inst.task = parse_task_kind(require_string(obj, "task"));
  inst.language = parse_language(require_string(obj, "language"));
  inst.query = Candidate::from_json(require_field(obj, "query"));
  for (const auto& c : require_field(obj, "pool")) inst.pool.push_back(Candidate::from_json(c));
  inst.relevant_position = require_field(obj, "relevant_position").get<std::size_t>();
  inst.validate();
  return inst;
}

PoolLayout sample_pool(std::size_t item_count, std::size_t relevant, std::size_t n, std::uint64_t stream) {
  if (relevant >= item_count) throw ValidationError("relevant index out of range");
  if (n + 1 > item_count) {
    throw ValidationError(std::to_string(item_count) + " items cannot supply " + std::to_string(n) +
                          " irrelevant candidates");
  }
  SplitMix64 rng(stream);

  // Partial Fisher-Yates over the virtual array [0, item_count - 1) where
  // slot v stands for item v (v < relevant) or v + 1 (v >= relevant).
  const std::size_t universe = item_count - 1;
  std::unordered_map<std::size_t, std::size_t> swapped;
  auto at = [&](std::size_t v) {
    auto it = swapped.find(v);
    return it == swapped.end() ? v : it->second;
  };
  PoolLayout layout;
  layout.members.reserve(n + 1);
  layout.members.push_back(relevant);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(universe - i));
    const std::size_t vi = at(i), vj = at(j);
    swapped[j] = vi;
    swapped[i] = vj;
    layout.members.push_back(vj < relevant ? vj : vj + 1);
  }
  rng.shuffle(std::span<std::size_t>(layout.members));
  layout.relevant_position = static_cast<std::size_t>(
      std::find(layout.members.begin(), layout.members.end(), relevant) - layout.members.begin());
  return layout;
}

BenchInstance build_pool(const Dataset& dataset, std::size_t index, TaskKind task, Language lang,
                         FormattingStyle style, std::size_t n, std::uint64_t seed) {
  const DatasetManifest& m = dataset.manifest;
  if (index >= dataset.records.size()) throw ValidationError("instance index out of range");
  const DatasetRecord& rec = dataset.records[index];
  const std::string prefix = suite_prefix(m.name, task, lang);

  std::size_t relevant = index;
  std::size_t universe = dataset.records.size();
  if (task == TaskKind::C) {
    if (!m.class_set) throw ValidationError("manifest '" + m.name + "' has no class_set");
    relevant = class_index(m, rec);
    universe = m.class_set->size();
  }
  PoolLayout layout;
  try {
    layout = sample_pool(universe, relevant, n, stream_seed(seed, m.name, index));
  } catch (const ValidationError& e) {
    throw ValidationError("dataset '" + m.name + "': " + e.what());
  }

  BenchInstance inst;
  inst.id = prefix + rec.id;
  inst.task = task;
  inst.language = lang;
  inst.query = make_query(rec, task, lang, style);
  inst.query.key = inst.id + "#query";
  inst.pool.reserve(layout.members.size());
  for (std::size_t k : layout.members) inst.pool.push_back(make_candidate(dataset, k, task, lang, style, prefix));
  inst.relevant_position = layout.relevant_position;
  return inst;
}

// ---------------------------------------------------------------------------
// Whole benchmark

std::vector<SuiteSpec> plan_benchmark(std::span<const DatasetManifest> manifests) {
  std::vector<SuiteSpec> specs;
  std::set<std::tuple<std::string, TaskKind, Language>> seen;
  for (const auto& m : manifests) {
    m.validate();
    for (TaskKind task : m.tasks) {
      const std::optional<std::size_t> classes =
          m.class_set ? std::optional<std::size_t>(m.class_set->size()) : std::nullopt;
      const std::size_t n = pool_size(m.cardinality, task, classes);
      for (Language lang : m.languages) {
        if (!is_supported(task, lang)) {
          throw ValidationError("manifest '" + m.name + "' declares " + std::string(to_string(task)) + " for " +
                                std::string(to_string(lang)) + ", which has no templates");
        }
        if (!seen.emplace(m.name, task, lang).second) {
          throw ValidationError("manifest '" + m.name + "' repeats " + std::string(to_string(task)) + "/" +
                                std::string(to_string(lang)));
        }
        specs.push_back({m.name, task, lang, n});
      }
    }
  }
  std::sort(specs.begin(), specs.end(), [](const SuiteSpec& a, const SuiteSpec& b) {
    return std::tie(a.dataset, a.task, a.language) < std::tie(b.dataset, b.task, b.language);
  });
  return specs;
}

std::vector<BenchmarkSuite> build_benchmark(std::span<const Dataset> datasets, FormattingStyle style,
                                            std::uint64_t seed, std::size_t jobs) {
  std::vector<DatasetManifest> manifests;
  for (const auto& ds : datasets) manifests.push_back(ds.manifest);
  const std::vector<SuiteSpec> specs = plan_benchmark(manifests);

  std::vector<BenchmarkSuite> suites(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t s) {
    const SuiteSpec& spec = specs[s];
    const Dataset* ds = nullptr;
    for (const auto& d : datasets) {
      if (d.manifest.name == spec.dataset && d.manifest.tasks.count(spec.task) &&
          d.manifest.languages.count(spec.language)) {
        ds = &d;
        break;
      }
    }
    if (ds->records.size() != ds->manifest.cardinality) {
      throw ValidationError("dataset '" + ds->manifest.name + "' record count does not match its cardinality");
    }
    BenchmarkSuite& suite = suites[s];
    suite.dataset = spec.dataset;
    suite.task = spec.task;
    suite.language = spec.language;
    suite.style = style;
    suite.seed = seed;
    suite.n = spec.n;
    suite.instances.reserve(ds->records.size());
    for (std::size_t i = 0; i < ds->records.size(); ++i) {
      suite.instances.push_back(build_pool(*ds, i, spec.task, spec.language, style, spec.n, seed));
    }
  });
  return suites;
}

void write_suites(const std::filesystem::path& path, std::span<const BenchmarkSuite> suites,
                  const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& s : suites) {
    w.write(Json{{"suite",
                  {{"dataset", s.dataset},
                   {"task", std::string(to_string(s.task))},
                   {"language", std::string(to_string(s.language))},
                   {"style", std::string(to_string(s.style))},
                   {"seed", s.seed},
                   {"n", s.n},
                   {"instances", s.instances.size()}}}});
    for (const auto& inst : s.instances) w.write(inst.to_json());
  }
  w.close();
}

std::vector<BenchmarkSuite> read_suites(const std::filesystem::path& path) {
  std::vector<BenchmarkSuite> suites;
  std::size_t expected = 0;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    if (auto it = obj.find("suite"); it != obj.end()) {
      if (!suites.empty() && suites.back().instances.size() != expected) {
        throw ValidationError("suite '" + suites.back().dataset + "' is truncated");
      }
      const Json& h = *it;
      BenchmarkSuite s;
      s.dataset = require_string(h, "dataset");
      s.task = parse_task_kind(require_string(h, "task"));
      s.language = parse_language(require_string(h, "language"));
      s.style = parse_style(require_string(h, "style"));
      s.seed = require_field(h, "seed").get<std::uint64_t>();
      s.n = require_field(h, "n").get<std::size_t>();
      expected = require_field(h, "instances").get<std::size_t>();
      suites.push_back(std::move(s));
      return;
    }
    if (suites.empty()) throw ValidationError("instance before any suite header");
    BenchInstance inst = BenchInstance::from_json(obj);
    if (inst.pool.size() != suites.back().n + 1) {
      throw ValidationError("instance '" + inst.id + "' pool has " + std::to_string(inst.pool.size()) +
                            " candidates, suite declares n = " + std::to_string(suites.back().n));
    }
    suites.back().instances.push_back(std::move(inst));
  });
  if (!suites.empty() && suites.back().instances.size() != expected) {
    throw ValidationError("suite '" + suites.back().dataset + "' is truncated");
  }
  return suites;
}

}  // namespace mmkd
