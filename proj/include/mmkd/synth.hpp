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

// Seeded synthetic fixtures: a pseudo-word vocabulary with a one-to-one
// dictionary per language, raw training instances, dictionary-translated
// parallel corpora and source datasets shaped like the benchmark's
// dataset list.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmkd/corpus.hpp"
#include "mmkd/random.hpp"
#include "mmkd/translate_prep.hpp"

namespace mmkd::synth {

struct WordBank {
  std::vector<std::string> english;
  // foreign[lang][i] translates english[i].
  std::map<Language, std::vector<std::string>> foreign;
  std::map<Language, std::map<std::string, std::string>> lookup;

  DictionaryTranslator translator() const;
  std::string translate_sentence(const std::string& sentence, Language lang) const;
};

// All words are distinct across languages and never spell a marker.
WordBank make_word_bank(std::size_t words, std::uint64_t seed);

// Space-separated words drawn from `words`, between min_len and max_len.
std::string sentence(const std::vector<std::string>& words, SplitMix64& rng, std::size_t min_len,
                     std::size_t max_len);

// Raw instances across a handful of retained tasks; about a third carry a
// query image, some a positive image and some a negative target.
std::vector<RawInstance> instances(std::size_t count, const WordBank& bank, std::uint64_t seed);

// Pairs whose translation is the word-by-word dictionary image of the
// English text. `image_fraction` of pairs carry a query image.
std::vector<ParallelPair> parallel_corpus(std::size_t count, const WordBank& bank, Language lang,
                                          std::uint64_t seed, double image_fraction = 0.0);

enum class Scale {
  Full,   // the real cardinalities (3600, 1000, 257, 264, 4042, 2825, 1000)
  Small,  // a little over 100 items per dataset, a dozen classes
};

std::vector<Dataset> benchmark_datasets(Scale scale, const WordBank& bank, std::uint64_t seed);

// Writes manifests.jsonl plus one records file per dataset into `dir`.
void write_datasets(const std::filesystem::path& dir, const std::vector<Dataset>& datasets);

}  // namespace mmkd::synth
