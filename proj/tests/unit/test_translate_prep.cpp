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

#include "mmkd/synth.hpp"
#include "mmkd/translate_prep.hpp"
#include "test_util.hpp"

namespace mmkd {
namespace {

RawInstance right_side() {
  RawInstance r;
  r.id = "right-side";
  r.task = "VQAv2";
  r.query_text = std::string(kImagePlaceholder) + "What is on the right side?";
  r.image_ref = "img/right-side.jpg";
  r.pos_text = "a tree";
  return r;
}

DictionaryTranslator italian() {
  DictionaryTranslator d;
  for (auto [en, it] : std::initializer_list<std::pair<const char*, const char*>>{
           {"what", "cosa"}, {"is", "c'è"}, {"on", "a"}, {"the", ""}, {"right", "destra"}, {"side", ""},
           {"a", "un"}, {"tree", "albero"}}) {
    d.add(Language::IT, en, it);
  }
  return d;
}

TEST(Wrap, StripsPlaceholderAndJoinsSections) {
  const WrappedBlock b = wrap_for_translation(right_side());
  EXPECT_EQ(b.text, "Question: What is on the right side?\nAnswer: a tree");
  EXPECT_TRUE(b.had_placeholder);
  EXPECT_FALSE(b.had_negative);
}

TEST(Wrap, NegativeAddsSecondAnswer) {
  RawInstance r = right_side();
  r.query_text = "q";
  r.image_ref.reset();
  r.pos_text = "a";
  r.neg_text = "b";
  const WrappedBlock b = wrap_for_translation(r);
  EXPECT_EQ(b.text, "Question: q\nAnswer: a\nAnswer: b");
  EXPECT_TRUE(b.had_negative);
  EXPECT_FALSE(b.had_placeholder);
}

TEST(Wrap, MarkerInsideQueryCollides) {
  RawInstance r = right_side();
  r.query_text = "Say Answer: now";
  r.image_ref.reset();
  EXPECT_THROW(wrap_for_translation(r), MarkerCollisionError);
  // The extraction oracle agrees: the wrapped form would carry two answers.
  const std::string naive = "Question: Say Answer: now\nAnswer: a tree";
  EXPECT_FALSE(extract_translation(naive, default_lexicon(Language::EN), false, false).extracted());
}

TEST(Wrap, TranslatedMarkerAlsoCollides) {
  RawInstance r = right_side();
  r.pos_text = "risposta : sì";
  EXPECT_THROW(wrap_for_translation(r), MarkerCollisionError);
}

TEST(Translate, IdentityReturnsInput) {
  const WrappedBlock b = wrap_for_translation(right_side());
  EXPECT_EQ(translate(b, Language::FR, IdentityTranslator()), b.text);
}

TEST(Translate, EnglishTargetRejected) {
  const WrappedBlock b = wrap_for_translation(right_side());
  EXPECT_THROW(translate(b, Language::EN, IdentityTranslator()), ValidationError);
}

TEST(Translate, DictionaryMapsMarkersAndWords) {
  const WrappedBlock b = wrap_for_translation(right_side());
  const std::string out = translate(b, Language::IT, italian());
  // By hand: each word replaced, markers swapped for the Italian ones.
  EXPECT_EQ(out, "Domanda: Cosa c'è a  destra ?\nRisposta: un albero");
}

class Failing final : public Translator {
 public:
  std::string translate(const std::string&, Language, Language) const override { throw std::runtime_error("boom"); }
};

TEST(Translate, FailureCarriesInstanceId) {
  const WrappedBlock b = wrap_for_translation(right_side());
  try {
    translate(b, Language::FR, Failing());
    FAIL();
  } catch (const TranslationError& e) {
    EXPECT_EQ(e.instance_id(), "right-side");
  }
}

TEST(Translate, CommandBridgeUsesStdinAndStdout) {
  const WrappedBlock b = wrap_for_translation(right_side());
  CommandTranslator tr("sh -c 'tr a-z A-Z' --");
  EXPECT_EQ(translate(b, Language::FR, tr), "QUESTION: WHAT IS ON THE RIGHT SIDE?\nANSWER: A TREE");
  EXPECT_THROW(translate(b, Language::FR, CommandTranslator("exit 3 ;")), TranslationError);
}

TEST(Extract, ItalianBlockWithPlaceholder) {
  const auto out = extract_translation("Domanda: Cosa c'è a destra?\nRisposta: un albero",
                                       default_lexicon(Language::IT), true, false);
  ASSERT_TRUE(out.extracted());
  EXPECT_EQ(*out.query, "<|image_1|>\nCosa c'è a destra?");
  EXPECT_EQ(*out.pos, "un albero");
  EXPECT_FALSE(out.neg.has_value());
}

TEST(Extract, MarkerMatchingIsLenient) {
  const auto out = extract_translation("  domanda :  x \nRISPOSTA:y", default_lexicon(Language::IT), false, false);
  ASSERT_TRUE(out.extracted());
  EXPECT_EQ(*out.query, "x");
  EXPECT_EQ(*out.pos, "y");
  // Untranslated English markers are accepted too.
  EXPECT_TRUE(extract_translation("Question: x\nAnswer: y", default_lexicon(Language::DE), false, false).extracted());
}

TEST(Extract, DiscardReasons) {
  const auto lex = default_lexicon(Language::FR);
  auto reason = [&](std::string_view text, bool neg) {
    const auto o = extract_translation(text, lex, false, neg);
    EXPECT_FALSE(o.extracted()) << text;
    return o.reason_code.value_or(DiscardReason::EmptyTranslation);
  };
  EXPECT_EQ(reason("   ", false), DiscardReason::EmptyTranslation);
  EXPECT_EQ(reason("x\nRéponse: y", false), DiscardReason::MissingQueryMarker);
  EXPECT_EQ(reason("Question: a\nQuestion: b\nRéponse: y", false), DiscardReason::ExtraQueryMarker);
  EXPECT_EQ(reason("Réponse: y\nQuestion: x", false), DiscardReason::MarkerOrder);
  EXPECT_EQ(reason("Question: x\nRéponse: y", true), DiscardReason::MissingAnswerMarker);
  EXPECT_EQ(reason("Question: x\nRéponse: y\nRéponse: z", false), DiscardReason::ExtraAnswerMarker);
  EXPECT_EQ(reason("Question: \nRéponse: y", false), DiscardReason::EmptyField);
  EXPECT_EQ(to_string(DiscardReason::MissingQueryMarker), "missing_query_marker");
}

TEST(Pairs, TwoPairsWithQueryImage) {
  const RawInstance r = right_side();
  const auto o = extract_translation("Domanda: Cosa c'è a destra?\nRisposta: un albero",
                                     default_lexicon(Language::IT), true, false);
  const auto pairs = build_parallel_pairs(r, o, Language::IT);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].id, "right-side:IT:query");
  EXPECT_EQ(pairs[0].image_ref, r.image_ref);
  EXPECT_EQ(pairs[1].id, "right-side:IT:pos");
  EXPECT_FALSE(pairs[1].image_ref.has_value());
  for (const auto& p : pairs) EXPECT_TRUE(validate_pair(p).ok());
}

TEST(Pairs, NegativeNeverEmitted) {
  RawInstance r = right_side();
  r.neg_text = "a car";
  const auto o = extract_translation(translate(wrap_for_translation(r), Language::FR, IdentityTranslator()),
                                     MarkerMatcher(default_lexicon(Language::FR)), wrap_for_translation(r));
  const auto pairs = build_parallel_pairs(r, o, Language::FR);
  ASSERT_EQ(pairs.size(), 2u);
  for (const auto& p : pairs) EXPECT_EQ(p.translated_text.find("a car"), std::string::npos);
}

TEST(Pairs, DiscardedOutcomeRejected) {
  ExtractionOutcome o;
  EXPECT_THROW(build_parallel_pairs(right_side(), o, Language::FR), ValidationError);
}

// Randomised properties over synthetic instances.

class Properties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(Properties, IdentityRoundTripIsExact) {
  const auto bank = synth::make_word_bank(120, GetParam());
  for (const auto& inst : synth::instances(60, bank, GetParam())) {
    const WrappedBlock b = wrap_for_translation(inst);
    const auto o = extract_translation(translate(b, Language::ES, IdentityTranslator()),
                                       MarkerMatcher(default_lexicon(Language::ES)), b);
    ASSERT_TRUE(o.extracted()) << inst.id;
    EXPECT_EQ(*o.query, inst.query_text);
    EXPECT_EQ(*o.pos, inst.pos_text);
    EXPECT_EQ(o.neg, inst.neg_text);
  }
}

TEST_P(Properties, DictionaryRoundTripGivesDictionaryImage) {
  const auto bank = synth::make_word_bank(120, GetParam());
  const auto dict = bank.translator();
  for (Language lang : {Language::FR, Language::DE, Language::IT, Language::ES}) {
    for (const auto& inst : synth::instances(40, bank, GetParam() + 1)) {
      const WrappedBlock b = wrap_for_translation(inst);
      const auto o = extract_translation(translate(b, lang, dict), MarkerMatcher(default_lexicon(lang)), b);
      ASSERT_TRUE(o.extracted()) << inst.id;
      EXPECT_EQ(*o.query, dict.translate_words(inst.query_text, lang));
      EXPECT_EQ(*o.pos, dict.translate_words(inst.pos_text, lang));
    }
  }
}

TEST_P(Properties, DeletingAnyMarkerDiscards) {
  const auto bank = synth::make_word_bank(120, GetParam());
  const auto dict = bank.translator();
  const MarkerMatcher matcher(default_lexicon(Language::IT));
  for (const auto& inst : synth::instances(40, bank, GetParam() + 2)) {
    const WrappedBlock b = wrap_for_translation(inst);
    const std::string text = translate(b, Language::IT, dict);
    ASSERT_TRUE(extract_translation(text, matcher, b).extracted());
    for (const auto& m : matcher.find_all(text)) {
      std::string mutant = text;
      mutant.erase(m.begin, m.end - m.begin);
      EXPECT_FALSE(extract_translation(mutant, matcher, b).extracted()) << mutant;
      // A second deletion cannot bring it back.
      for (const auto& m2 : matcher.find_all(mutant)) {
        std::string twice = mutant;
        twice.erase(m2.begin, m2.end - m2.begin);
        EXPECT_FALSE(extract_translation(twice, matcher, b).extracted()) << twice;
      }
    }
  }
}

TEST_P(Properties, NoPairCarriesAMarker) {
  const auto bank = synth::make_word_bank(120, GetParam());
  const auto insts = synth::instances(50, bank, GetParam() + 3);
  const std::vector<Language> langs{Language::FR, Language::IT};
  const auto res = prepare_corpus(insts, langs, bank.translator());
  const MarkerMatcher any(combined_lexicon());
  for (const auto& p : res.pairs) {
    EXPECT_FALSE(any.contains_marker(p.english_text));
    EXPECT_FALSE(any.contains_marker(p.translated_text));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, Properties, ::testing::Values(1u, 2u, 3u, 17u));

TEST(PrepareCorpus, CountsAndOrder) {
  const auto bank = synth::make_word_bank(80, 4);
  auto insts = synth::instances(100, bank, 4);
  // Seven instances whose queries embed a marker are discarded per language.
  for (int i = 0; i < 7; ++i) insts[i * 13].query_text += " Answer: x";
  std::reverse(insts.begin(), insts.end());
  const std::vector<Language> langs{Language::IT, Language::FR, Language::DE, Language::ES};
  const auto res = prepare_corpus(insts, langs, bank.translator(), 3);
  EXPECT_EQ(res.pairs.size(), 2u * 93u * 4u);
  EXPECT_EQ(res.discards.size(), 7u * 4u);
  for (const auto& d : res.discards) EXPECT_EQ(d.reason, DiscardReason::MarkerCollision);
  // Sorted by instance id, then by the given language order.
  EXPECT_EQ(res.pairs[0].id, "inst-00001:IT:query");
  EXPECT_EQ(res.pairs[1].id, "inst-00001:IT:pos");
  EXPECT_EQ(res.pairs[2].id, "inst-00001:FR:query");
  const auto again = prepare_corpus(insts, langs, bank.translator(), 1);
  EXPECT_EQ(again.pairs, res.pairs);
}

TEST(PrepareCorpus, EmptyTranslationIsDiscarded) {
  class Blank final : public Translator {
   public:
    std::string translate(const std::string&, Language, Language) const override { return ""; }
  };
  const std::vector<RawInstance> insts{right_side()};
  const std::vector<Language> langs{Language::FR};
  const auto res = prepare_corpus(insts, langs, Blank());
  EXPECT_TRUE(res.pairs.empty());
  ASSERT_EQ(res.discards.size(), 1u);
  EXPECT_EQ(res.discards[0].reason, DiscardReason::EmptyTranslation);
}

TEST(Dictionary, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const auto d = italian();
  d.save(dir / "d.jsonl");
  EXPECT_EQ(DictionaryTranslator::load(dir / "d.jsonl").dictionaries(), d.dictionaries());
  const auto tr = make_translator("dict:" + (dir / "d.jsonl").string());
  EXPECT_EQ(tr->translate("Question: tree\nAnswer: a", Language::EN, Language::IT), "Domanda: albero\nRisposta: un");
  EXPECT_THROW(make_translator("marian"), ValidationError);
}

}  // namespace
}  // namespace mmkd
