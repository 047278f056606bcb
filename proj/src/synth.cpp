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

#include "mmkd/synth.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace mmkd::synth {
namespace {

constexpr const char* kConsonants = "bcdfghklmnprstvz";
constexpr const char* kVowels = "aeiou";

// Consonant-vowel syllables only, so no word can spell a section marker.
std::string pseudo_word(SplitMix64& rng) {
  const std::size_t syllables = 2 + rng.below(3);
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kConsonants[rng.below(16)];
    w += kVowels[rng.below(5)];
  }
  return w;
}

std::string zero_padded(std::size_t i, int width = 5) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i);
  return buf;
}

constexpr const char* kTasks[] = {"MSCOCO_i2t", "VisualNews_t2i", "VQAv2", "Visual7W", "N24News", "RefCOCO", "OK-VQA"};

struct DatasetShape {
  const char* name;
  const char* file;
  std::size_t full;
  std::size_t small;
  std::set<Language> languages;
  std::set<TaskKind> tasks;
};

std::map<Language, std::vector<std::string>> texts_in(const WordBank& bank, const std::set<Language>& langs,
                                                      const std::vector<std::string>& english) {
  std::map<Language, std::vector<std::string>> out;
  for (Language l : langs) {
    auto& v = out[l];
    for (const auto& s : english) v.push_back(l == Language::EN ? s : bank.translate_sentence(s, l));
  }
  return out;
}

}  // namespace

DictionaryTranslator WordBank::translator() const {
  std::map<Language, DictionaryTranslator::WordMap> dicts;
  for (const auto& [lang, words] : foreign) {
    auto& d = dicts[lang];
    for (std::size_t i = 0; i < english.size(); ++i) d.emplace(english[i], words[i]);
  }
  return DictionaryTranslator(std::move(dicts));
}

std::string WordBank::translate_sentence(const std::string& text, Language lang) const {
  if (lang == Language::EN) return text;
  const auto& dict = lookup.at(lang);
  std::istringstream in(text);
  std::string word, out;
  while (in >> word) {
    if (!out.empty()) out += ' ';
    auto it = dict.find(word);
    out += it == dict.end() ? word : it->second;
  }
  return out;
}

WordBank make_word_bank(std::size_t words, std::uint64_t seed) {
  if (words == 0) throw ValidationError("word bank needs at least one word");
  SplitMix64 rng(stream_seed(seed, "word-bank", 0));
  std::set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  WordBank bank;
  for (std::size_t i = 0; i < words; ++i) bank.english.push_back(fresh());
  for (Language l : kAllLanguages) {
    if (l == Language::EN) continue;
    auto& v = bank.foreign[l];
    auto& d = bank.lookup[l];
    for (std::size_t i = 0; i < words; ++i) {
      v.push_back(fresh());
      d.emplace(bank.english[i], v.back());
    }
  }
  return bank;
}

std::string sentence(const std::vector<std::string>& words, SplitMix64& rng, std::size_t min_len,
                     std::size_t max_len) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) out += ' ';
    out += words[rng.below(words.size())];
  }
  return out;
}

std::vector<RawInstance> instances(std::size_t count, const WordBank& bank, std::uint64_t seed) {
  std::vector<RawInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 rng(stream_seed(seed, "instances", i));
    RawInstance inst;
    inst.id = "inst-" + zero_padded(i);
    inst.task = kTasks[rng.below(std::size(kTasks))];
    inst.query_text = sentence(bank.english, rng, 3, 9);
    inst.pos_text = sentence(bank.english, rng, 2, 7);
    const auto kind = rng.below(6);
    if (kind < 2) {
      inst.query_text = std::string(kImagePlaceholder) + inst.query_text;
      inst.image_ref = "train/" + inst.id + ".jpg";
    } else if (kind == 2) {
      inst.pos_text = std::string(kImagePlaceholder) + inst.pos_text;
      inst.pos_image_ref = "train/" + inst.id + "-pos.jpg";
    }
    if (rng.below(4) == 0) inst.neg_text = sentence(bank.english, rng, 2, 7);
    // Occasional capitalised sentence start.
    if (rng.below(3) == 0) {
      std::string& q = inst.query_text;
      const std::size_t at = inst.image_ref ? kImagePlaceholder.size() : 0;
      q[at] = static_cast<char>(q[at] - 'a' + 'A');
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ParallelPair> parallel_corpus(std::size_t count, const WordBank& bank, Language lang,
                                          std::uint64_t seed, double image_fraction) {
  if (lang == Language::EN) throw ValidationError("parallel corpus needs a non-English language");
  std::vector<ParallelPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 rng(stream_seed(seed, "parallel", i));
    ParallelPair p;
    p.id = "pair-" + zero_padded(i) + ":" + std::string(to_string(lang));
    p.language = lang;
    const std::string en = sentence(bank.english, rng, 2, 8);
    p.english_text = en;
    p.translated_text = bank.translate_sentence(en, lang);
    if (rng.unit() < image_fraction) {
      p.english_text = std::string(kImagePlaceholder) + p.english_text;
      p.translated_text = std::string(kImagePlaceholder) + p.translated_text;
      p.image_ref = "pairs/" + zero_padded(i) + ".jpg";
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Dataset> benchmark_datasets(Scale scale, const WordBank& bank, std::uint64_t seed) {
  const std::set<Language> all(std::begin(kAllLanguages), std::end(kAllLanguages));
  const std::vector<DatasetShape> shapes = {
      {"Crossmodal-3600", "crossmodal3600.jsonl", 3600, 150, all, {TaskKind::I2T, TaskKind::T2I}},
      {"XTD10", "xtd10.jsonl", 1000, 120, all, {TaskKind::I2T, TaskKind::T2I}},
      {"MaXM", "maxm_en.jsonl", 257, 110, {Language::EN}, {TaskKind::VQA}},
      {"MaXM", "maxm_fr.jsonl", 264, 105, {Language::FR}, {TaskKind::VQA}},
      {"Flickr30k-Entities", "flickr30k_en.jsonl", 4042, 130, {Language::EN}, {TaskKind::VG}},
      {"Flickr30k-Entities", "flickr30k_fr.jsonl", 2825, 115, {Language::FR}, {TaskKind::VG}},
      {"ImageNet-1k", "imagenet1k.jsonl", 1000, 100, all, {TaskKind::C}},
  };
  const std::size_t classes = scale == Scale::Full ? 1000 : 12;

  std::vector<Dataset> out;
  for (const auto& shape : shapes) {
    Dataset ds;
    DatasetManifest& m = ds.manifest;
    m.name = shape.name;
    m.cardinality = scale == Scale::Full ? shape.full : shape.small;
    m.languages = shape.languages;
    m.tasks = shape.tasks;
    m.records = shape.file;
    const bool classification = shape.tasks.count(TaskKind::C) > 0;
    const std::string stem = std::string(shape.file).substr(0, std::string(shape.file).find('.'));

    if (classification) {
      SplitMix64 rng(stream_seed(seed, stem + "/classes", 0));
      std::vector<std::string> ids, english;
      for (std::size_t k = 0; k < classes; ++k) {
        ids.push_back("n" + zero_padded(k, 8));
        english.push_back(sentence(bank.english, rng, 1, 2));
      }
      m.class_set = ids;
      for (Language l : m.languages) {
        auto& names = m.class_names[l];
        for (const auto& e : english) names.push_back(l == Language::EN ? e : bank.translate_sentence(e, l));
      }
    }

    for (std::size_t i = 0; i < m.cardinality; ++i) {
      SplitMix64 rng(stream_seed(seed, stem, i));
      DatasetRecord r;
      r.id = stem + "-" + zero_padded(i);
      r.image_ref = stem + "/" + r.id + ".jpg";
      if (classification) {
        r.label = (*m.class_set)[i < classes ? i : rng.below(classes)];
      } else if (shape.tasks.count(TaskKind::VQA)) {
        r.text = texts_in(bank, m.languages, {sentence(bank.english, rng, 3, 8)});
        r.answer = texts_in(bank, m.languages, {sentence(bank.english, rng, 1, 3)});
      } else if (shape.tasks.count(TaskKind::VG)) {
        r.crop_ref = stem + "/" + r.id + "-crop.jpg";
        r.text = texts_in(bank, m.languages, {sentence(bank.english, rng, 1, 3)});
      } else {
        // Several captions per image; the first is the one used.
        std::vector<std::string> captions;
        const std::size_t n = 1 + rng.below(3);
        for (std::size_t c = 0; c < n; ++c) captions.push_back(sentence(bank.english, rng, 4, 10));
        r.text = texts_in(bank, m.languages, captions);
      }
      ds.records.push_back(std::move(r));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

void write_datasets(const std::filesystem::path& dir, const std::vector<Dataset>& datasets) {
  std::filesystem::create_directories(dir);
  std::vector<DatasetManifest> manifests;
  for (const auto& ds : datasets) {
    manifests.push_back(ds.manifest);
    write_dataset_records(dir / ds.manifest.records, ds.records);
  }
  write_manifests(dir / "manifests.jsonl", manifests);
}

}  // namespace mmkd::synth
