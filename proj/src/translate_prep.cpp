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

#include "mmkd/translate_prep.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "mmkd/parallel.hpp"

namespace mmkd {
namespace {

constexpr std::string_view kQuestion = "Question:";
constexpr std::string_view kAnswer = "Answer:";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// "Domanda :" -> "Domanda"
std::string marker_word(std::string_view marker) {
  std::string w = trim(marker);
  while (!w.empty() && (w.back() == ':' || is_space(w.back()))) w.pop_back();
  if (w.empty()) throw ValidationError("empty marker in lexicon");
  return w;
}

std::string regex_escape(std::string_view s) {
  static constexpr std::string_view kSpecial = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : s) {
    if (kSpecial.find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

std::string alternation(const std::vector<std::string>& markers) {
  std::set<std::string> seen;
  std::string out;
  for (const auto& m : markers) {
    std::string w = regex_escape(marker_word(m));
    if (!seen.insert(w).second) continue;
    if (!out.empty()) out += '|';
    out += w;
  }
  return out;
}

std::string strip_placeholder(const std::string& text, bool& had) {
  const auto pos = text.find(kImagePlaceholder);
  had = pos != std::string::npos;
  if (!had) return text;
  std::string out = text;
  out.erase(pos, kImagePlaceholder.size());
  return out;
}

ExtractionOutcome discard(DiscardReason reason, std::string detail) {
  ExtractionOutcome out;
  out.status = ExtractionOutcome::Status::Discarded;
  out.reason_code = reason;
  out.reason = std::move(detail);
  return out;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x80) return true;
  return !is_space(c) && !std::ispunct(u);
}

}  // namespace

// ---------------------------------------------------------------------------
// Lexicons

MarkerLexicon default_lexicon(Language lang) {
  MarkerLexicon lex;
  lex.language = lang;
  switch (lang) {
    case Language::EN: break;
    case Language::FR:
      lex.question_markers = {"Question:"};
      lex.answer_markers = {"Réponse:"};
      break;
    case Language::DE:
      lex.question_markers = {"Frage:"};
      lex.answer_markers = {"Antwort:"};
      break;
    case Language::IT:
      lex.question_markers = {"Domanda:"};
      lex.answer_markers = {"Risposta:"};
      break;
    case Language::ES:
      lex.question_markers = {"Pregunta:"};
      lex.answer_markers = {"Respuesta:"};
      break;
  }
  lex.question_markers.emplace_back(kQuestion);
  lex.answer_markers.emplace_back(kAnswer);
  return lex;
}

MarkerLexicon combined_lexicon() {
  MarkerLexicon all;
  for (Language lang : kAllLanguages) {
    const MarkerLexicon lex = default_lexicon(lang);
    all.question_markers.insert(all.question_markers.end(), lex.question_markers.begin(),
                                lex.question_markers.end());
    all.answer_markers.insert(all.answer_markers.end(), lex.answer_markers.begin(),
                              lex.answer_markers.end());
  }
  return all;
}

MarkerMatcher::MarkerMatcher(const MarkerLexicon& lexicon) {
  if (lexicon.question_markers.empty() || lexicon.answer_markers.empty()) {
    throw ValidationError("marker lexicon for " + std::string(to_string(lexicon.language)) +
                          " must list question and answer markers");
  }
  const std::string pattern = "((?:" + alternation(lexicon.question_markers) + ")\\s*:)|((?:" +
                              alternation(lexicon.answer_markers) + ")\\s*:)";
  pattern_ = std::regex(pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
}

std::vector<MarkerMatcher::Match> MarkerMatcher::find_all(std::string_view text) const {
  std::vector<Match> out;
  using It = std::regex_iterator<std::string_view::const_iterator>;
  for (It it(text.begin(), text.end(), pattern_), end; it != end; ++it) {
    const auto& m = *it;
    const auto begin = static_cast<std::size_t>(m.position(0));
    out.push_back({m[1].matched ? Kind::Question : Kind::Answer, begin,
                   begin + static_cast<std::size_t>(m.length(0))});
  }
  return out;
}

bool MarkerMatcher::contains_marker(std::string_view text) const {
  return std::regex_search(text.begin(), text.end(), pattern_);
}

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::EmptyTranslation: return "empty_translation";
    case DiscardReason::MissingQueryMarker: return "missing_query_marker";
    case DiscardReason::ExtraQueryMarker: return "extra_query_marker";
    case DiscardReason::MarkerOrder: return "marker_order";
    case DiscardReason::MissingAnswerMarker: return "missing_answer_marker";
    case DiscardReason::ExtraAnswerMarker: return "extra_answer_marker";
    case DiscardReason::EmptyField: return "empty_field";
    case DiscardReason::MarkerCollision: return "marker_collision";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Wrapping

MarkerCollisionError::MarkerCollisionError(const std::string& instance_id, const std::string& field)
    : ValidationError("marker collision: " + field + " of instance '" + instance_id +
                      "' contains a marker string") {}

WrappedBlock wrap_for_translation(const RawInstance& inst) {
  static const MarkerMatcher collisions(combined_lexicon());

  WrappedBlock block;
  block.instance_id = inst.id;
  const std::string query = strip_placeholder(inst.query_text, block.had_placeholder);
  const std::string pos = strip_placeholder(inst.pos_text, block.pos_had_placeholder);
  std::string neg;
  if (inst.neg_text) {
    block.had_negative = true;
    neg = strip_placeholder(*inst.neg_text, block.neg_had_placeholder);
  }

  if (collisions.contains_marker(query)) throw MarkerCollisionError(inst.id, "query");
  if (collisions.contains_marker(pos)) throw MarkerCollisionError(inst.id, "positive target");
  if (block.had_negative && collisions.contains_marker(neg)) {
    throw MarkerCollisionError(inst.id, "negative target");
  }

  block.text.reserve(query.size() + pos.size() + neg.size() + 32);
  block.text.append(kQuestion).append(" ").append(query);
  block.text.append(kSectionSeparator).append(kAnswer).append(" ").append(pos);
  if (block.had_negative) block.text.append(kSectionSeparator).append(kAnswer).append(" ").append(neg);
  return block;
}

// ---------------------------------------------------------------------------
// Translators

std::string translate(const WrappedBlock& block, Language target, const Translator& translator) {
  if (target == Language::EN) {
    throw ValidationError("translation target must not be EN (instance '" + block.instance_id + "')");
  }
  try {
    return translator.translate(block.text, Language::EN, target);
  } catch (const TranslationError&) {
    throw;
  } catch (const std::exception& e) {
    throw TranslationError(block.instance_id, e.what());
  }
}

DictionaryTranslator DictionaryTranslator::load(const std::filesystem::path& path) {
  DictionaryTranslator t;
  for_each_record(path, [&](std::size_t, const Json& obj) {
    const Language lang = parse_language(require_string(obj, "language"));
    for (const auto& [src, dst] : require_field(obj, "entries").items()) {
      t.add(lang, src, dst.get<std::string>());
    }
  });
  return t;
}

void DictionaryTranslator::save(const std::filesystem::path& path) const {
  RecordWriter w(path);
  for (const auto& [lang, words] : dictionaries_) {
    w.write(Json{{"language", std::string(to_string(lang))}, {"entries", words}});
  }
  w.close();
}

void DictionaryTranslator::add(Language target, std::string source_word, std::string target_word) {
  std::transform(source_word.begin(), source_word.end(), source_word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  dictionaries_[target][std::move(source_word)] = std::move(target_word);
}

std::string DictionaryTranslator::translate_words(std::string_view text, Language target) const {
  const auto dict_it = dictionaries_.find(target);
  if (dict_it == dictionaries_.end()) return std::string(text);
  const WordMap& dict = dict_it->second;

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j])) ++j;
    const std::string_view word = text.substr(i, j - i);
    std::string key(word);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (auto it = dict.find(key); it != dict.end()) {
      std::string repl = it->second;
      if (!repl.empty() && std::isupper(static_cast<unsigned char>(word.front())) &&
          std::islower(static_cast<unsigned char>(repl.front()))) {
        repl.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(repl.front())));
      }
      out += repl;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::string DictionaryTranslator::translate(const std::string& text, Language source,
                                            Language target) const {
  static const MarkerMatcher english(default_lexicon(Language::EN));
  if (source != Language::EN) throw Error("dictionary translator only translates from EN");
  const MarkerLexicon lex = default_lexicon(target);
  std::string out;
  std::size_t cursor = 0;
  for (const auto& m : english.find_all(text)) {
    out += translate_words(std::string_view(text).substr(cursor, m.begin - cursor), target);
    out += m.kind == MarkerMatcher::Kind::Question ? lex.question_markers.front()
                                                   : lex.answer_markers.front();
    cursor = m.end;
  }
  out += translate_words(std::string_view(text).substr(cursor), target);
  return out;
}

std::string CommandTranslator::translate(const std::string& text, Language source,
                                         Language target) const {
  char tmpl[] = "/tmp/mmkd-translate-XXXXXX";
  const int fd = ::mkstemp(tmpl);
  if (fd < 0) throw Error("cannot create temporary file for translator input");
  const std::string input_path = tmpl;
  {
    std::ofstream in(input_path, std::ios::binary);
    in << text;
  }
  ::close(fd);
  const std::string cmd = command_ + " " + std::string(to_string(source)) + " " +
                          std::string(to_string(target)) + " < '" + input_path + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(input_path.c_str());
    throw Error("cannot start translator command '" + command_ + "'");
  }
  std::string output;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
  const int status = ::pclose(pipe);
  std::remove(input_path.c_str());
  if (status != 0) {
    throw Error("translator command '" + command_ + "' exited with status " + std::to_string(status));
  }
  return output;
}

std::unique_ptr<Translator> make_translator(const std::string& spec) {
  if (spec == "identity") return std::make_unique<IdentityTranslator>();
  if (spec.rfind("dict:", 0) == 0) {
    return std::make_unique<DictionaryTranslator>(DictionaryTranslator::load(spec.substr(5)));
  }
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<CommandTranslator>(spec.substr(4));
  throw ValidationError("unknown translator '" + spec + "' (expected identity, dict:<path> or cmd:<command>)");
}

// ---------------------------------------------------------------------------
// Extraction

ExtractionOutcome extract_translation(std::string_view translated, const MarkerMatcher& matcher,
                                      const WrappedBlock& layout) {
  if (trim(translated).empty()) return discard(DiscardReason::EmptyTranslation, "empty translation");

  const auto matches = matcher.find_all(translated);
  const std::size_t questions = std::count_if(matches.begin(), matches.end(), [](const auto& m) {
    return m.kind == MarkerMatcher::Kind::Question;
  });
  const std::size_t answers = matches.size() - questions;
  const std::size_t expected_answers = layout.had_negative ? 2 : 1;

  if (questions == 0) return discard(DiscardReason::MissingQueryMarker, "missing query marker");
  if (questions > 1) return discard(DiscardReason::ExtraQueryMarker, "more than one query marker");
  if (matches.front().kind != MarkerMatcher::Kind::Question) {
    return discard(DiscardReason::MarkerOrder, "answer marker precedes the query marker");
  }
  if (answers < expected_answers) {
    return discard(DiscardReason::MissingAnswerMarker,
                   "expected " + std::to_string(expected_answers) + " answer markers, found " +
                       std::to_string(answers));
  }
  if (answers > expected_answers) {
    return discard(DiscardReason::ExtraAnswerMarker,
                   "expected " + std::to_string(expected_answers) + " answer markers, found " +
                       std::to_string(answers));
  }

  auto section = [&](std::size_t k) {
    const std::size_t b = matches[k].end;
    const std::size_t e = k + 1 < matches.size() ? matches[k + 1].begin : translated.size();
    return trim(translated.substr(b, e - b));
  };
  std::string query = section(0);
  std::string pos = section(1);
  std::optional<std::string> neg;
  if (layout.had_negative) neg = section(2);
  if (query.empty() || pos.empty() || (neg && neg->empty())) {
    return discard(DiscardReason::EmptyField, "a translated section is empty");
  }

  const std::string placeholder(kImagePlaceholder);
  ExtractionOutcome out;
  out.status = ExtractionOutcome::Status::Extracted;
  out.query = layout.had_placeholder ? placeholder + query : query;
  out.pos = layout.pos_had_placeholder ? placeholder + pos : pos;
  if (neg) out.neg = layout.neg_had_placeholder ? placeholder + *neg : *neg;
  return out;
}

ExtractionOutcome extract_translation(std::string_view translated, const MarkerLexicon& lexicon,
                                      bool had_placeholder, bool had_negative) {
  WrappedBlock layout;
  layout.had_placeholder = had_placeholder;
  layout.had_negative = had_negative;
  return extract_translation(translated, MarkerMatcher(lexicon), layout);
}

std::vector<ParallelPair> build_parallel_pairs(const RawInstance& original,
                                               const ExtractionOutcome& outcome, Language language) {
  if (!outcome.extracted()) {
    throw ValidationError("cannot build pairs for discarded instance '" + original.id + "'");
  }
  const std::string prefix = original.id + ":" + std::string(to_string(language));
  std::vector<ParallelPair> pairs(2);
  pairs[0].id = prefix + ":query";
  pairs[0].language = language;
  pairs[0].english_text = original.query_text;
  pairs[0].translated_text = *outcome.query;
  pairs[0].image_ref = original.image_ref;
  pairs[1].id = prefix + ":pos";
  pairs[1].language = language;
  pairs[1].english_text = original.pos_text;
  pairs[1].translated_text = *outcome.pos;
  pairs[1].image_ref = original.pos_image_ref;
  for (auto& p : pairs) p.identity_translation = language != Language::EN && p.translated_text == p.english_text;
  return pairs;
}

// ---------------------------------------------------------------------------
// Pipeline

Json DiscardRecord::to_json() const {
  return Json{{"instance_id", instance_id},
              {"language", std::string(to_string(language))},
              {"reason", std::string(to_string(reason))},
              {"detail", detail}};
}

PrepResult prepare_corpus(std::span<const RawInstance> instances, std::span<const Language> languages,
                          const Translator& translator, std::size_t jobs) {
  for (Language lang : languages) {
    if (lang == Language::EN) throw ValidationError("EN is the source language, not a target");
  }
  std::vector<MarkerMatcher> matchers;
  for (Language lang : languages) matchers.emplace_back(default_lexicon(lang));

  struct Slot {
    std::vector<ParallelPair> pairs;
    std::optional<DiscardRecord> discard;
  };
  const std::size_t n_lang = languages.size();
  std::vector<Slot> slots(instances.size() * n_lang);

  parallel_for(slots.size(), jobs, [&](std::size_t k) {
    const RawInstance& inst = instances[k / n_lang];
    const std::size_t li = k % n_lang;
    const Language lang = languages[li];
    WrappedBlock block;
    try {
      block = wrap_for_translation(inst);
    } catch (const MarkerCollisionError& e) {
      slots[k].discard = DiscardRecord{inst.id, lang, DiscardReason::MarkerCollision, e.what()};
      return;
    }
    const std::string translated = translate(block, lang, translator);
    const ExtractionOutcome outcome = extract_translation(translated, matchers[li], block);
    if (outcome.extracted()) {
      slots[k].pairs = build_parallel_pairs(inst, outcome, lang);
    } else {
      slots[k].discard = DiscardRecord{inst.id, lang, *outcome.reason_code, *outcome.reason};
    }
  });

  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return instances[a].id < instances[b].id; });

  PrepResult result;
  for (std::size_t i : order) {
    for (std::size_t li = 0; li < n_lang; ++li) {
      Slot& s = slots[i * n_lang + li];
      for (auto& p : s.pairs) result.pairs.push_back(std::move(p));
      if (s.discard) result.discards.push_back(std::move(*s.discard));
    }
  }
  return result;
}

void write_discards(const std::filesystem::path& path, std::span<const DiscardRecord> discards,
                    const std::optional<Provenance>& provenance) {
  RecordWriter w(path, provenance);
  for (const auto& d : discards) w.write(d.to_json());
  w.close();
}

}  // namespace mmkd
