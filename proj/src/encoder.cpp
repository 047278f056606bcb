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

#include "mmkd/encoder.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmkd/random.hpp"

namespace mmkd {
namespace {

constexpr std::string_view kImageTag = "<|image_1|>";
constexpr std::string_view kCheckpointMagic = "mmkd-encoder";

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x80) return true;
  return !std::isspace(u) && !std::ispunct(u);
}

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void read_rows(std::istream& in, Matrix& m, const std::filesystem::path& path, std::size_t& line_no,
               const char* what) {
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!std::getline(in, line)) {
      throw FormatError(path.string(), line_no + 1, std::string("truncated ") + what);
    }
    ++line_no;
    const char* p = line.c_str();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw FormatError(path.string(), line_no, std::string("expected ") +
                                                                  std::to_string(m.cols()) + " values in " + what);
      if (!std::isfinite(v)) throw FormatError(path.string(), line_no, "non-finite parameter");
      m(r, c) = v;
      p = end;
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p != '\0') throw FormatError(path.string(), line_no, std::string("too many values in ") + what);
  }
}

void write_rows(std::ostream& out, const Matrix& m) {
  char buf[40];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace

std::vector<TokenId> tokenize(std::string_view text, std::size_t vocab_size) {
  if (vocab_size < 2) throw ValidationError("vocab_size must be at least 2");
  std::vector<TokenId> out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    out.push_back(static_cast<TokenId>(1 + fnv1a64(word) % (vocab_size - 1)));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, kImageTag.size(), kImageTag) == 0) {
      flush();
      out.push_back(kImageToken);
      i += kImageTag.size();
      if (i < text.size() && text[i] == '\n') ++i;
      continue;
    }
    const char c = text[i];
    if (is_word_byte(c)) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  if (out.empty()) out.push_back(kPadToken);
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  if (cfg.vocab_size < 2 || cfg.dim == 0 || cfg.feature_dim == 0) {
    throw ValidationError("encoder dimensions must be positive (vocab >= 2)");
  }
  EncoderParams p;
  p.vocab_size = cfg.vocab_size;
  p.dim = cfg.dim;
  p.feature_dim = cfg.feature_dim;
  p.embedding_table = Matrix(cfg.vocab_size, cfg.dim);
  p.image_projector = Matrix(cfg.feature_dim, cfg.dim);
  SplitMix64 rng(seed);
  for (double& v : p.embedding_table.data()) v = rng.uniform(-cfg.init_scale, cfg.init_scale);
  for (double& v : p.image_projector.data()) v = rng.uniform(-cfg.init_scale, cfg.init_scale);
  return p;
}

void EncoderParams::validate() const {
  if (vocab_size < 2 || dim == 0 || feature_dim == 0) throw ValidationError("encoder dimensions must be positive");
  if (embedding_table.rows() != vocab_size || embedding_table.cols() != dim) {
    throw ValidationError("embedding table shape does not match vocab_size x dim");
  }
  if (image_projector.rows() != feature_dim || image_projector.cols() != dim) {
    throw ValidationError("image projector shape does not match feature_dim x dim");
  }
  for (double v : embedding_table.data()) {
    if (!std::isfinite(v)) throw ValidationError("embedding table has non-finite entries");
  }
  for (double v : image_projector.data()) {
    if (!std::isfinite(v)) throw ValidationError("image projector has non-finite entries");
  }
}

std::uint64_t checksum(const EncoderParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t dims[3] = {params.vocab_size, params.dim, params.feature_dim};
  h = fnv_bytes(h, dims, sizeof dims);
  h = fnv_bytes(h, params.embedding_table.data().data(), params.embedding_table.data().size() * sizeof(double));
  h = fnv_bytes(h, params.image_projector.data().data(), params.image_projector.data().size() * sizeof(double));
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const std::optional<Provenance>& provenance) {
  params.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (provenance) out << "# " << dump_line(provenance->to_json()) << '\n';
  out << kCheckpointMagic << " 1 " << params.vocab_size << ' ' << params.dim << ' '
      << params.feature_dim << '\n';
  write_rows(out, params.embedding_table);
  write_rows(out, params.image_projector);
  out.close();
  if (out.fail()) throw Error("write failed on '" + path.string() + "'");
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] != '#') break;
  }
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  EncoderParams p;
  header >> magic >> version >> p.vocab_size >> p.dim >> p.feature_dim;
  if (!header || magic != kCheckpointMagic || version != 1) {
    throw FormatError(path.string(), line_no, "not an mmkd encoder checkpoint");
  }
  if (p.vocab_size < 2 || p.dim == 0 || p.feature_dim == 0) {
    throw FormatError(path.string(), line_no, "invalid checkpoint dimensions");
  }
  p.embedding_table = Matrix(p.vocab_size, p.dim);
  p.image_projector = Matrix(p.feature_dim, p.dim);
  read_rows(in, p.embedding_table, path, line_no, "embedding table");
  read_rows(in, p.image_projector, path, line_no, "image projector");
  return p;
}

// ---------------------------------------------------------------------------
// Forward and pooling

EmbeddingMatrix forward(const EncoderParams& params, std::string_view text,
                        std::optional<std::span<const double>> image) {
  const std::vector<TokenId> tokens = tokenize(text, params.vocab_size);
  std::size_t image_tokens = 0;
  for (TokenId t : tokens) image_tokens += t == kImageToken;
  if (image_tokens > 1) throw ValidationError("text contains more than one image placeholder");
  if ((image_tokens == 1) != image.has_value()) {
    throw ValidationError(image_tokens ? "text has an image placeholder but no image was given"
                                       : "an image was given but the text has no image placeholder");
  }
  if (image && image->size() != params.feature_dim) {
    throw ValidationError("image features have dimension " + std::to_string(image->size()) +
                          ", encoder expects " + std::to_string(params.feature_dim));
  }

  EmbeddingMatrix out;
  out.rows = Matrix(tokens.size(), params.dim);
  out.tokens = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto row = out.rows.row(i);
    if (tokens[i] == kImageToken) {
      for (std::size_t a = 0; a < params.feature_dim; ++a) {
        const double f = (*image)[a];
        const auto proj = params.image_projector.row(a);
        for (std::size_t j = 0; j < params.dim; ++j) row[j] += f * proj[j];
      }
      out.image_span = ImageSpan{i, i + 1};
    } else {
      const auto src = params.embedding_table.row(tokens[i]);
      std::copy(src.begin(), src.end(), row.begin());
    }
  }
  return out;
}

PooledVector pool(const EmbeddingMatrix& matrix, Pooling mode, std::optional<ImageSpan> span) {
  const Matrix& rows = matrix.rows;
  if (rows.rows() == 0) throw ValidationError("cannot pool an empty sequence");
  PooledVector out;
  out.pooling = mode;
  if (mode == Pooling::LastToken) {
    const auto last = rows.row(rows.rows() - 1);
    out.values.assign(last.begin(), last.end());
    return out;
  }
  const ImageSpan s = span.value_or(ImageSpan{0, rows.rows()});
  if (s.begin >= s.end || s.end > rows.rows()) throw ValidationError("mean pooling over an empty or out-of-range span");
  out.values.assign(rows.cols(), 0.0);
  for (std::size_t r = s.begin; r < s.end; ++r) {
    const auto row = rows.row(r);
    for (std::size_t j = 0; j < rows.cols(); ++j) out.values[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  for (double& v : out.values) v *= inv;
  return out;
}

PooledVector pool_image(const EmbeddingMatrix& matrix) {
  if (!matrix.image_span) throw ValidationError("sequence has no image span");
  return pool(matrix, Pooling::Mean, matrix.image_span);
}

FrozenEncoder clone_frozen(const EncoderParams& params) { return FrozenEncoder(params); }

// ---------------------------------------------------------------------------
// Embedders

std::vector<double> ReferenceEmbedder::embed(const EncodeItem& item) const {
  std::optional<std::vector<double>> feats;
  if (item.image_ref) feats = images_.features(*item.image_ref);
  std::optional<std::span<const double>> image;
  if (feats) image = std::span<const double>(*feats);
  return pool(forward(params_, item.text, image), Pooling::LastToken).values;
}

std::vector<double> PrecomputedEmbedder::embed(const EncodeItem& item) const {
  auto it = vectors_.find(item.key);
  if (it == vectors_.end()) throw ValidationError("no precomputed embedding for '" + item.key + "'");
  return {it->second.begin(), it->second.end()};
}

}  // namespace mmkd
