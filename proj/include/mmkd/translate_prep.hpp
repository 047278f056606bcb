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

// Translation preprocessing for the distillation corpus.
//
// An instance's query, positive and (optional) negative texts are joined
// into one block so the translator sees them in context:
//
//   Question: <query>\nAnswer: <pos>[\nAnswer: <neg>]
//
// The image placeholder is removed first and re-inserted after the block
// comes back. Translated sections are recovered by matching the marker
// words of the target language (and the untranslated English ones); any
// block whose marker structure does not match what was sent is discarded.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmkd/common.hpp"
#include "mmkd/corpus.hpp"

namespace mmkd {

inline constexpr std::string_view kSectionSeparator = "\n";

struct WrappedBlock {
  std::string instance_id;
  std::string text;
  // Placeholder was stripped from the query.
  bool had_placeholder = false;
  bool had_negative = false;
  // Placeholder was stripped from the positive / negative target.
  bool pos_had_placeholder = false;
  bool neg_had_placeholder = false;
};

struct MarkerLexicon {
  Language language = Language::EN;
  std::vector<std::string> question_markers;
  std::vector<std::string> answer_markers;
};

// Defaults: the language's own markers first, then the English ones.
MarkerLexicon default_lexicon(Language lang);
// Every default marker of every language; used for collision checks.
MarkerLexicon combined_lexicon();

// Compiled form of a lexicon. Matching is case-insensitive and tolerates
// whitespace before the colon; the leftmost match wins.
class MarkerMatcher {
 public:
  enum class Kind { Question, Answer };

  struct Match {
    Kind kind;
    std::size_t begin;
    std::size_t end;
  };

  explicit MarkerMatcher(const MarkerLexicon& lexicon);

  std::vector<Match> find_all(std::string_view text) const;
  bool contains_marker(std::string_view text) const;

 private:
  std::regex pattern_;
};

enum class DiscardReason {
  EmptyTranslation,
  MissingQueryMarker,
  ExtraQueryMarker,
  MarkerOrder,
  MissingAnswerMarker,
  ExtraAnswerMarker,
  EmptyField,
  MarkerCollision,
};

std::string_view to_string(DiscardReason reason);

struct ExtractionOutcome {
  enum class Status { Extracted, Discarded };

  Status status = Status::Discarded;
  std::optional<std::string> query;
  std::optional<std::string> pos;
  std::optional<std::string> neg;
  std::optional<DiscardReason> reason_code;
  std::optional<std::string> reason;

  bool extracted() const { return status == Status::Extracted; }
};

// Thrown by wrap_for_translation when an instance text already contains a
// marker, which would make extraction ambiguous.
class MarkerCollisionError : public ValidationError {
 public:
  MarkerCollisionError(const std::string& instance_id, const std::string& field);
};

WrappedBlock wrap_for_translation(const RawInstance& inst);

// Translation backend. Implementations must be safe to call concurrently.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string translate(const std::string& text, Language source, Language target) const = 0;
};

class TranslationError : public Error {
 public:
  TranslationError(std::string instance_id, const std::string& what)
      : Error("translation of '" + instance_id + "' failed: " + what),
        instance_id_(std::move(instance_id)) {}
  const std::string& instance_id() const { return instance_id_; }

 private:
  std::string instance_id_;
};

// Returns the translator's output for the block verbatim.
std::string translate(const WrappedBlock& block, Language target, const Translator& translator);

class IdentityTranslator final : public Translator {
 public:
  std::string translate(const std::string& text, Language, Language) const override { return text; }
};

// Word-level pseudo-translator. Markers are replaced by the target
// lexicon's first entries; every maximal run of non-space, non-ASCII-
// punctuation bytes is looked up (lower-cased) in the target dictionary.
// A leading ASCII capital is carried over to the replacement.
class DictionaryTranslator final : public Translator {
 public:
  using WordMap = std::map<std::string, std::string>;

  DictionaryTranslator() = default;
  explicit DictionaryTranslator(std::map<Language, WordMap> dictionaries)
      : dictionaries_(std::move(dictionaries)) {}

  // File format: one {"language": "IT", "entries": {"what": "cosa", ...}}
  // object per line.
  static DictionaryTranslator load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void add(Language target, std::string source_word, std::string target_word);
  // Substitutes words only; markers are left untouched.
  std::string translate_words(std::string_view text, Language target) const;
  std::string translate(const std::string& text, Language source, Language target) const override;

  const std::map<Language, WordMap>& dictionaries() const { return dictionaries_; }

 private:
  std::map<Language, WordMap> dictionaries_;
};

// Bridge to an external MT system: runs `<command> <SRC> <TGT>` through
// the shell with the block on stdin and takes stdout as the translation.
class CommandTranslator final : public Translator {
 public:
  explicit CommandTranslator(std::string command) : command_(std::move(command)) {}
  std::string translate(const std::string& text, Language source, Language target) const override;

 private:
  std::string command_;
};

// Builds a translator from a CLI spec: "identity", "dict:<path>" or
// "cmd:<shell command>".
std::unique_ptr<Translator> make_translator(const std::string& spec);

ExtractionOutcome extract_translation(std::string_view translated, const MarkerMatcher& matcher,
                                      const WrappedBlock& layout);
ExtractionOutcome extract_translation(std::string_view translated, const MarkerLexicon& lexicon,
                                      bool had_placeholder, bool had_negative);

// Two pairs per extracted instance: (query, translated query) carrying the
// query image, then (pos, translated pos) carrying the positive image if any.
// Negative targets are never emitted.
std::vector<ParallelPair> build_parallel_pairs(const RawInstance& original,
                                               const ExtractionOutcome& outcome, Language language);

struct DiscardRecord {
  std::string instance_id;
  Language language = Language::EN;
  DiscardReason reason = DiscardReason::EmptyTranslation;
  std::string detail;

  Json to_json() const;
};

struct PrepResult {
  std::vector<ParallelPair> pairs;
  std::vector<DiscardRecord> discards;
};

// Wraps, translates and extracts every (instance, language) combination.
// Output is ordered by instance id, then by the order of `languages`.
PrepResult prepare_corpus(std::span<const RawInstance> instances, std::span<const Language> languages,
                          const Translator& translator, std::size_t jobs = 1);

void write_discards(const std::filesystem::path& path, std::span<const DiscardRecord> discards,
                    const std::optional<Provenance>& provenance = std::nullopt);

}  // namespace mmkd
