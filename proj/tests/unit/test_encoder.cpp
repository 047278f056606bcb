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

#include <cmath>

#include "mmkd/encoder.hpp"
#include "mmkd/random.hpp"
#include "test_util.hpp"

namespace mmkd {
namespace {

EncoderParams tiny() {
  EncoderConfig cfg;
  cfg.vocab_size = 16;
  cfg.dim = 3;
  cfg.feature_dim = 2;
  return EncoderParams::init(cfg, 9);
}

TEST(Tokenize, HashIdsMatchOracle) {
  // Ids computed by a separate Python FNV-1a implementation.
  EXPECT_EQ(tokenize("hello world", 4096), (std::vector<TokenId>{4087, 2436}));
  EXPECT_EQ(tokenize("Hello, WORLD!", 4096), (std::vector<TokenId>{4087, 2436}));
  EXPECT_EQ(tokenize("a hello", 16), (std::vector<TokenId>{2, 7}));
}

TEST(Tokenize, EmptyAndPlaceholder) {
  EXPECT_EQ(tokenize("", 16), std::vector<TokenId>{kPadToken});
  EXPECT_EQ(tokenize(" ?! ", 16), std::vector<TokenId>{kPadToken});
  EXPECT_EQ(tokenize("<|image_1|>\nhello", 16), (std::vector<TokenId>{kImageToken, 7}));
  EXPECT_EQ(tokenize("<|image_1|>", 16), std::vector<TokenId>{kImageToken});
}

TEST(Tokenize, NeverEmitsPadForWords) {
  SplitMix64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::string w;
    for (std::size_t k = 0, n = 1 + rng.below(8); k < n; ++k) w += static_cast<char>('a' + rng.below(26));
    for (TokenId t : tokenize(w, 7)) {
      EXPECT_GE(t, 1u);
      EXPECT_LT(t, 7u);
    }
  }
}

TEST(Params, InitIsSeededAndBounded) {
  const auto a = tiny();
  EXPECT_EQ(a, tiny());
  EXPECT_EQ(a.embedding_table.rows(), 16u);
  EXPECT_EQ(a.image_projector.rows(), 2u);
  for (double v : a.embedding_table.data()) {
    EXPECT_GE(v, -0.1);
    EXPECT_LT(v, 0.1);
  }
  EncoderConfig cfg;
  cfg.vocab_size = 16;
  cfg.dim = 3;
  cfg.feature_dim = 2;
  EXPECT_NE(checksum(EncoderParams::init(cfg, 10)), checksum(a));
}

TEST(Params, CheckpointRoundTripIsBitExact) {
  testing::TempDir dir;
  EncoderConfig cfg;
  cfg.vocab_size = 50;
  cfg.dim = 7;
  cfg.feature_dim = 4;
  auto p = EncoderParams::init(cfg, 3);
  p.embedding_table(3, 2) = 1.0 / 3.0;
  p.embedding_table(4, 0) = -5e-300;
  save_checkpoint(dir / "m.ckpt", p, Provenance{"train", Json::object()});
  const auto q = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(p, q);
  EXPECT_EQ(checksum(p), checksum(q));
}

TEST(Params, BadCheckpointsRejected) {
  testing::TempDir dir;
  testing::spit(dir / "a", "mmkd-encoder 2 4 2 2\n");
  EXPECT_THROW(load_checkpoint(dir / "a"), Error);
  testing::spit(dir / "b", "mmkd-encoder 1 2 2 1\n1 2\n3\n4 5\n");
  EXPECT_THROW(load_checkpoint(dir / "b"), Error);
  testing::spit(dir / "c", "mmkd-encoder 1 2 2 1\n1 2\n3 4\n");
  EXPECT_THROW(load_checkpoint(dir / "c"), Error);
}

TEST(Forward, TextRowsAreTableRows) {
  const auto p = tiny();
  const auto m = forward(p, "a hello");
  ASSERT_EQ(m.rows.rows(), 2u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(m.rows(0, j), p.embedding_table(2, j));
    EXPECT_EQ(m.rows(1, j), p.embedding_table(7, j));
  }
  EXPECT_FALSE(m.image_span.has_value());
}

TEST(Forward, ImageRowIsProjection) {
  const auto p = tiny();
  const std::vector<double> feats{0.5, -2.0};
  const auto m = forward(p, "<|image_1|>\nhello", std::span<const double>(feats));
  ASSERT_TRUE(m.image_span.has_value());
  EXPECT_EQ(*m.image_span, (ImageSpan{0, 1}));
  for (std::size_t j = 0; j < 3; ++j) {
    const double want = 0.5 * p.image_projector(0, j) - 2.0 * p.image_projector(1, j);
    EXPECT_NEAR(m.rows(0, j), want, 1e-15);
  }
  EXPECT_EQ(pool_image(m).values, std::vector<double>(m.rows.row(0).begin(), m.rows.row(0).end()));
}

TEST(Forward, ImagePresenceMustMatchText) {
  const auto p = tiny();
  const std::vector<double> feats{1, 2};
  const std::vector<double> wrong{1, 2, 3};
  EXPECT_THROW(forward(p, "<|image_1|>\nx"), ValidationError);
  EXPECT_THROW(forward(p, "x", std::span<const double>(feats)), ValidationError);
  EXPECT_THROW(forward(p, "<|image_1|>\nx", std::span<const double>(wrong)), ValidationError);
  EXPECT_THROW(forward(p, "<|image_1|>\n<|image_1|>\nx", std::span<const double>(feats)), ValidationError);
}

TEST(Pool, LastTokenAndMean) {
  EmbeddingMatrix m;
  m.rows = Matrix(3, 2);
  m.rows.data() = {1, 2, 3, 4, 5, 9};
  EXPECT_EQ(pool(m, Pooling::LastToken).values, (std::vector<double>{5, 9}));
  EXPECT_EQ(pool(m, Pooling::Mean).values, (std::vector<double>{3, 5}));
  EXPECT_EQ(pool(m, Pooling::Mean, ImageSpan{0, 2}).values, (std::vector<double>{2, 3}));
  EXPECT_THROW(pool(m, Pooling::Mean, ImageSpan{1, 1}), ValidationError);
  EXPECT_THROW(pool_image(m), ValidationError);
  EXPECT_THROW(pool(EmbeddingMatrix{}, Pooling::LastToken), ValidationError);
}

TEST(Frozen, CopyIsIndependent) {
  auto p = tiny();
  const auto teacher = clone_frozen(p);
  const auto before = teacher.checksum();
  p.embedding_table(1, 1) += 1.0;
  EXPECT_EQ(teacher.checksum(), before);
  EXPECT_NE(checksum(p), before);
}

TEST(Embedders, ReferenceAndPrecomputed) {
  const auto p = tiny();
  const ReferenceEmbedder ref(p, ImageFeatureStore::synthetic(2));
  const auto v = ref.embed({"k", "a hello", std::nullopt});
  EXPECT_EQ(v, pool(forward(p, "a hello"), Pooling::LastToken).values);
  const auto iv = ref.embed({"k2", "<|image_1|>\nhello", "img/1.jpg"});
  EXPECT_EQ(iv.size(), 3u);
  EXPECT_EQ(iv, ref.embed({"k2", "<|image_1|>\nhello", "img/1.jpg"}));

  const PrecomputedEmbedder pre({{"k", {1.5f, 2.0f}}});
  EXPECT_EQ(pre.embed({"k", "ignored", std::nullopt}), (std::vector<double>{1.5, 2.0}));
  EXPECT_THROW(pre.embed({"missing", "", std::nullopt}), Error);
}

}  // namespace
}  // namespace mmkd
