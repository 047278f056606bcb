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

// A small trainable reference encoder. Text tokens look up rows of an
// embedding table; the image placeholder expands to a single row obtained
// by projecting the image's raw features. The output is an m x d sequence
// embedding that is pooled to one d-vector.

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmkd/common.hpp"
#include "mmkd/corpus.hpp"
#include "mmkd/records.hpp"

namespace mmkd {

using TokenId = std::uint32_t;

// Emitted for empty text. Word hashes never map here.
inline constexpr TokenId kPadToken = 0;
// Marks where the image row is inserted; has no table row.
inline constexpr TokenId kImageToken = std::numeric_limits<TokenId>::max();

// Lower-cases ASCII, splits on whitespace and ASCII punctuation (which is
// dropped) and maps each word w to 1 + fnv1a64(w) % (vocab_size - 1).
// "<|image_1|>" (with an optional trailing newline) becomes kImageToken.
std::vector<TokenId> tokenize(std::string_view text, std::size_t vocab_size);

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct EncoderConfig {
  std::size_t vocab_size = 4096;
  std::size_t dim = 64;
  std::size_t feature_dim = 32;
  double init_scale = 0.1;
};

struct EncoderParams {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::size_t feature_dim = 0;
  Matrix embedding_table;  // vocab_size x dim
  Matrix image_projector;  // feature_dim x dim

  // Entries drawn from U[-scale, scale) with a SplitMix64 stream; table
  // first, then projector, both row-major.
  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);

  void validate() const;

  bool operator==(const EncoderParams&) const = default;
};

// FNV-1a over the dimensions and the IEEE-754 bytes of every parameter.
std::uint64_t checksum(const EncoderParams& params);

// Checkpoint text format:
//   # <provenance json>                 (optional comment lines)
//   mmkd-encoder 1 <vocab> <dim> <feature_dim>
//   <vocab rows of dim values>          (embedding table)
//   <feature_dim rows of dim values>    (image projector)
// Values are written with 17 significant digits so a load is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const std::optional<Provenance>& provenance = std::nullopt);
EncoderParams load_checkpoint(const std::filesystem::path& path);

struct ImageSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - begin; }
  bool operator==(const ImageSpan&) const = default;
};

struct EmbeddingMatrix {
  Matrix rows;  // m x d
  std::optional<ImageSpan> image_span;
  // Token per row (kImageToken for the image row).
  std::vector<TokenId> tokens;
};

enum class Pooling { LastToken, Mean };

struct PooledVector {
  std::vector<double> values;
  Pooling pooling = Pooling::LastToken;
};

// `image` must be present iff the text contains the placeholder.
EmbeddingMatrix forward(const EncoderParams& params, std::string_view text,
                        std::optional<std::span<const double>> image = std::nullopt);

// LastToken takes row m-1. Mean averages `span` when given, all rows
// otherwise; an empty span throws.
PooledVector pool(const EmbeddingMatrix& matrix, Pooling mode,
                  std::optional<ImageSpan> span = std::nullopt);

// Mean over the matrix's own image span; throws when it has none.
PooledVector pool_image(const EmbeddingMatrix& matrix);

// Read-only teacher. Holds a deep copy, so training the source parameters
// never changes it.
class FrozenEncoder {
 public:
  explicit FrozenEncoder(EncoderParams params) : params_(std::move(params)) {}
  const EncoderParams& params() const { return params_; }
  std::uint64_t checksum() const { return mmkd::checksum(params_); }

 private:
  EncoderParams params_;
};

FrozenEncoder clone_frozen(const EncoderParams& params);

// Something to embed: text plus an optional image. `key` identifies it in
// precomputed embedding stores.
struct EncodeItem {
  std::string key;
  std::string text;
  std::optional<std::string> image_ref;
};

// Produces pooled vectors for benchmark queries and candidates.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const EncodeItem& item) const = 0;
};

// The reference encoder with last-token pooling.
class ReferenceEmbedder final : public Embedder {
 public:
  ReferenceEmbedder(EncoderParams params, ImageFeatureStore images)
      : params_(std::move(params)), images_(std::move(images)) {}

  std::vector<double> embed(const EncodeItem& item) const override;
  const EncoderParams& params() const { return params_; }

 private:
  EncoderParams params_;
  ImageFeatureStore images_;
};

// Looks vectors up by key in an exported embedding store.
class PrecomputedEmbedder final : public Embedder {
 public:
  explicit PrecomputedEmbedder(std::map<std::string, EmbeddingVector> vectors)
      : vectors_(std::move(vectors)) {}

  std::vector<double> embed(const EncodeItem& item) const override;

 private:
  std::map<std::string, EmbeddingVector> vectors_;
};

}  // namespace mmkd
