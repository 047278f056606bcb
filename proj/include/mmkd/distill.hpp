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

// Self-knowledge distillation between a frozen teacher T and a trainable
// student S that start as copies of one encoder. For an English text x and
// its translation y:
//
//   loss_e = mse(pool(T(x)), pool(S(x))) + mse(pool(T(x)), pool(S(y)))
//   total  = loss_e / 2
//
// With the image term enabled, image rows are mean-pooled and
//
//   loss_i = mse(pool_img(T(x)), pool_img(S(x))) + mse(pool_img(T(x)), pool_img(S(y)))
//   total  = (loss_e + loss_i) / 4
//
// Pairs without an image always use total = loss_e / 2, even when the
// image term is enabled.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mmkd/corpus.hpp"
#include "mmkd/encoder.hpp"

namespace mmkd {

struct LossConfig {
  bool use_image_loss = false;
  double learning_rate = 1e-2;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  // Worker threads for per-pair work inside a batch.
  std::size_t jobs = 1;

  void validate() const;
  Json to_json() const;
};

struct LossBreakdown {
  double loss_e = 0.0;
  std::optional<double> loss_i;
  double total = 0.0;
};

// (1/d) * sum_i (a_i - b_i)^2
double mse(std::span<const double> a, std::span<const double> b);

double loss_e(const PooledVector& t_x, const PooledVector& s_x, const PooledVector& s_y);
// Inputs must be mean-pooled image vectors.
double loss_i(const PooledVector& t_img_x, const PooledVector& s_img_x, const PooledVector& s_img_y);

LossBreakdown total_loss(const ParallelPair& pair, const FrozenEncoder& teacher,
                         const EncoderParams& student, const ImageFeatureStore& images,
                         const LossConfig& cfg);

// Gradient of the total loss with respect to the student. Only the table
// rows that receive gradient are stored.
struct ParamGradients {
  std::map<TokenId, std::vector<double>> table_rows;
  std::optional<Matrix> projector;

  // this += scale * other
  void accumulate(const ParamGradients& other, double scale = 1.0);
  // Value for one table entry (0 when the row is absent).
  double table(TokenId row, std::size_t col) const;
  double projector_at(std::size_t row, std::size_t col) const;
  bool all_zero() const;
};

ParamGradients gradients(const ParallelPair& pair, const FrozenEncoder& teacher,
                         const EncoderParams& student, const ImageFeatureStore& images,
                         const LossConfig& cfg);

struct TrainReport {
  std::size_t steps = 0;
  std::vector<double> step_losses;
  double initial_mean_total = 0.0;
  double final_mean_total = 0.0;

  void write(const std::filesystem::path& path,
             const std::optional<Provenance>& provenance = std::nullopt) const;
};

struct TrainResult {
  EncoderParams student;
  TrainReport report;
};

class TrainingDivergedError : public Error {
 public:
  explicit TrainingDivergedError(std::size_t step)
      : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Plain gradient descent on batch-mean totals. One seeded permutation per
// epoch; the last partial batch is kept. Per-pair gradients are summed in
// pair order, so the result does not depend on cfg.jobs.
TrainResult train(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                  EncoderParams student, const ImageFeatureStore& images, const LossConfig& cfg);

double mean_total_loss(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                       const EncoderParams& student, const ImageFeatureStore& images,
                       const LossConfig& cfg);

// Mean cosine between last-token vectors over a corpus.
struct AlignmentStats {
  double translated_to_teacher = 0.0;  // cos(S(y), T(x))
  double english_to_teacher = 0.0;     // cos(S(x), T(x))
};

AlignmentStats measure_alignment(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                                 const EncoderParams& student, const ImageFeatureStore& images);

struct FiniteDiffResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Compares analytic gradients with central differences on every parameter
// the pair touches (table rows of its tokens, plus the projector when the
// pair has an image). eps is rounded to the nearest power of two so the
// perturbed values are exact. Relative error uses the denominator
// max(|analytic|, |numeric|, 1e-12).
FiniteDiffResult finite_diff_check(const ParallelPair& pair, const EncoderParams& student,
                                   const FrozenEncoder& teacher, const ImageFeatureStore& images,
                                   const LossConfig& cfg, double eps = 1e-5);

}  // namespace mmkd
