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

#include "mmkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mmkd/eval.hpp"
#include "mmkd/parallel.hpp"
#include "mmkd/random.hpp"

namespace mmkd {
namespace {

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
  }
}

// Everything the loss needs for one pair, computed once.
struct PairForward {
  std::optional<std::vector<double>> image;
  EmbeddingMatrix teacher_x;
  EmbeddingMatrix student_x;
  EmbeddingMatrix student_y;
  bool image_term = false;
  double weight = 0.5;
};

std::optional<std::span<const double>> as_span(const std::optional<std::vector<double>>& v) {
  if (!v) return std::nullopt;
  return std::span<const double>(*v);
}

PairForward run_forward(const ParallelPair& pair, const FrozenEncoder& teacher,
                        const EncoderParams& student, const ImageFeatureStore& images,
                        const LossConfig& cfg) {
  check_dims(teacher.params().dim, student.dim, "teacher/student");
  PairForward f;
  if (pair.image_ref) f.image = images.features(*pair.image_ref);
  f.teacher_x = forward(teacher.params(), pair.english_text, as_span(f.image));
  f.student_x = forward(student, pair.english_text, as_span(f.image));
  f.student_y = forward(student, pair.translated_text, as_span(f.image));
  f.image_term = cfg.use_image_loss && pair.image_ref.has_value();
  f.weight = f.image_term ? 0.25 : 0.5;
  return f;
}

LossBreakdown loss_from_forward(const PairForward& f) {
  LossBreakdown out;
  const PooledVector t_x = pool(f.teacher_x, Pooling::LastToken);
  out.loss_e = loss_e(t_x, pool(f.student_x, Pooling::LastToken), pool(f.student_y, Pooling::LastToken));
  if (f.image_term) {
    out.loss_i = loss_i(pool_image(f.teacher_x), pool_image(f.student_x), pool_image(f.student_y));
    out.total = (out.loss_e + *out.loss_i) * 0.25;
  } else {
    out.total = out.loss_e * 0.5;
  }
  return out;
}

// Routes d(total)/d(row) = g into the parameter that produced `row`.
void route_row_gradient(const EmbeddingMatrix& m, std::size_t row, std::span<const double> g,
                        const std::optional<std::vector<double>>& image, std::size_t feature_dim,
                        ParamGradients& out) {
  const TokenId tok = m.tokens[row];
  const std::size_t d = g.size();
  if (tok == kImageToken) {
    if (!out.projector) out.projector = Matrix(feature_dim, d);
    for (std::size_t a = 0; a < feature_dim; ++a) {
      const double fa = (*image)[a];
      auto prow = out.projector->row(a);
      for (std::size_t j = 0; j < d; ++j) prow[j] += fa * g[j];
    }
  } else {
    auto& dst = out.table_rows[tok];
    if (dst.empty()) dst.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
  }
}

// g = weight * (2/d) * (s - t)
std::vector<double> mse_grad(const std::vector<double>& s, const std::vector<double>& t, double weight) {
  const double scale = weight * 2.0 / static_cast<double>(s.size());
  std::vector<double> g(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) g[j] = scale * (s[j] - t[j]);
  return g;
}

ParamGradients gradients_from_forward(const PairForward& f, std::size_t feature_dim) {
  ParamGradients out;
  const auto t_x = pool(f.teacher_x, Pooling::LastToken).values;
  for (const EmbeddingMatrix* s : {&f.student_x, &f.student_y}) {
    const auto s_last = pool(*s, Pooling::LastToken).values;
    route_row_gradient(*s, s->rows.rows() - 1, mse_grad(s_last, t_x, f.weight), f.image, feature_dim, out);
  }
  if (f.image_term) {
    const auto t_img = pool_image(f.teacher_x).values;
    for (const EmbeddingMatrix* s : {&f.student_x, &f.student_y}) {
      const ImageSpan span = *s->image_span;
      auto g = mse_grad(pool_image(*s).values, t_img, f.weight);
      const double inv = 1.0 / static_cast<double>(span.size());
      for (double& v : g) v *= inv;
      for (std::size_t r = span.begin; r < span.end; ++r) route_row_gradient(*s, r, g, f.image, feature_dim, out);
    }
  }
  return out;
}

double nearest_power_of_two(double x) { return std::exp2(std::round(std::log2(x))); }

}  // namespace

// ---------------------------------------------------------------------------

void LossConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be positive");
  }
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (jobs == 0) throw ValidationError("jobs must be positive");
}

Json LossConfig::to_json() const {
  return Json{{"use_image_loss", use_image_loss}, {"learning_rate", learning_rate},
              {"batch_size", batch_size},         {"epochs", epochs},
              {"seed", seed}};
}

double mse(std::span<const double> a, std::span<const double> b) {
  check_dims(a.size(), b.size(), "mse");
  if (a.empty()) throw ValidationError("mse: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(a.size());
}

double loss_e(const PooledVector& t_x, const PooledVector& s_x, const PooledVector& s_y) {
  return mse(t_x.values, s_x.values) + mse(t_x.values, s_y.values);
}

double loss_i(const PooledVector& t_img_x, const PooledVector& s_img_x, const PooledVector& s_img_y) {
  for (const PooledVector* v : {&t_img_x, &s_img_x, &s_img_y}) {
    if (v->pooling != Pooling::Mean) throw ValidationError("loss_i expects mean-pooled image vectors");
  }
  return mse(t_img_x.values, s_img_x.values) + mse(t_img_x.values, s_img_y.values);
}

LossBreakdown total_loss(const ParallelPair& pair, const FrozenEncoder& teacher,
                         const EncoderParams& student, const ImageFeatureStore& images,
                         const LossConfig& cfg) {
  return loss_from_forward(run_forward(pair, teacher, student, images, cfg));
}

void ParamGradients::accumulate(const ParamGradients& other, double scale) {
  for (const auto& [tok, g] : other.table_rows) {
    auto& dst = table_rows[tok];
    if (dst.empty()) dst.assign(g.size(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += scale * g[j];
  }
  if (other.projector) {
    if (!projector) projector = Matrix(other.projector->rows(), other.projector->cols());
    auto& dst = projector->data();
    const auto& src = other.projector->data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += scale * src[i];
  }
}

double ParamGradients::table(TokenId row, std::size_t col) const {
  auto it = table_rows.find(row);
  return it == table_rows.end() ? 0.0 : it->second[col];
}

double ParamGradients::projector_at(std::size_t row, std::size_t col) const {
  return projector ? (*projector)(row, col) : 0.0;
}

bool ParamGradients::all_zero() const {
  for (const auto& [tok, g] : table_rows) {
    for (double v : g) {
      if (v != 0.0) return false;
    }
  }
  if (projector) {
    for (double v : projector->data()) {
      if (v != 0.0) return false;
    }
  }
  return true;
}

ParamGradients gradients(const ParallelPair& pair, const FrozenEncoder& teacher,
                         const EncoderParams& student, const ImageFeatureStore& images,
                         const LossConfig& cfg) {
  return gradients_from_forward(run_forward(pair, teacher, student, images, cfg), student.feature_dim);
}

// ---------------------------------------------------------------------------
// Training

void TrainReport::write(const std::filesystem::path& path,
                        const std::optional<Provenance>& provenance) const {
  RecordWriter w(path, provenance);
  for (std::size_t i = 0; i < step_losses.size(); ++i) {
    w.write(Json{{"step", i}, {"loss", step_losses[i]}});
  }
  w.write(Json{{"summary",
                {{"steps", steps},
                 {"initial_mean_total", initial_mean_total},
                 {"final_mean_total", final_mean_total}}}});
  w.close();
}

double mean_total_loss(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                       const EncoderParams& student, const ImageFeatureStore& images,
                       const LossConfig& cfg) {
  if (corpus.empty()) throw ValidationError("corpus is empty");
  std::vector<double> totals(corpus.size());
  parallel_for(corpus.size(), cfg.jobs, [&](std::size_t i) {
    totals[i] = total_loss(corpus[i], teacher, student, images, cfg).total;
  });
  double sum = 0.0;
  for (double t : totals) sum += t;
  return sum / static_cast<double>(corpus.size());
}

TrainResult train(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                  EncoderParams student, const ImageFeatureStore& images, const LossConfig& cfg) {
  cfg.validate();
  student.validate();
  if (corpus.empty()) throw ValidationError("training corpus is empty");
  check_dims(teacher.params().dim, student.dim, "teacher/student");
  if (cfg.use_image_loss &&
      std::none_of(corpus.begin(), corpus.end(), [](const ParallelPair& p) { return p.image_ref.has_value(); })) {
    throw ValidationError("image loss requested but no pair in the corpus has an image");
  }

  TrainResult result;
  result.report.initial_mean_total = mean_total_loss(corpus, teacher, student, images, cfg);

  std::vector<std::size_t> order(corpus.size());
  struct Slot {
    double total = 0.0;
    ParamGradients grad;
  };
  std::vector<Slot> slots;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(stream_seed(cfg.seed, "epoch", epoch));
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t n = end - begin;
      slots.assign(n, Slot{});
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const PairForward f = run_forward(corpus[order[begin + i]], teacher, student, images, cfg);
        slots[i].total = loss_from_forward(f).total;
        slots[i].grad = gradients_from_forward(f, student.feature_dim);
      });

      const double inv_n = 1.0 / static_cast<double>(n);
      double batch_loss = 0.0;
      ParamGradients grad;
      for (const Slot& s : slots) {
        batch_loss += s.total;
        grad.accumulate(s.grad, inv_n);
      }
      batch_loss *= inv_n;
      if (!std::isfinite(batch_loss)) throw TrainingDivergedError(step);
      result.report.step_losses.push_back(batch_loss);

      for (const auto& [tok, g] : grad.table_rows) {
        auto row = student.embedding_table.row(tok);
        for (std::size_t j = 0; j < g.size(); ++j) row[j] -= cfg.learning_rate * g[j];
      }
      if (grad.projector) {
        auto& p = student.image_projector.data();
        const auto& g = grad.projector->data();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
      }
    }
  }
  result.report.steps = step;
  result.report.final_mean_total = mean_total_loss(corpus, teacher, student, images, cfg);
  if (!std::isfinite(result.report.final_mean_total)) throw TrainingDivergedError(step);
  result.student = std::move(student);
  return result;
}

AlignmentStats measure_alignment(std::span<const ParallelPair> corpus, const FrozenEncoder& teacher,
                                 const EncoderParams& student, const ImageFeatureStore& images) {
  if (corpus.empty()) throw ValidationError("corpus is empty");
  AlignmentStats stats;
  for (const ParallelPair& pair : corpus) {
    std::optional<std::vector<double>> image;
    if (pair.image_ref) image = images.features(*pair.image_ref);
    const auto t_x = pool(forward(teacher.params(), pair.english_text, as_span(image)), Pooling::LastToken);
    const auto s_x = pool(forward(student, pair.english_text, as_span(image)), Pooling::LastToken);
    const auto s_y = pool(forward(student, pair.translated_text, as_span(image)), Pooling::LastToken);
    stats.translated_to_teacher += cosine(s_y.values, t_x.values);
    stats.english_to_teacher += cosine(s_x.values, t_x.values);
  }
  const double inv = 1.0 / static_cast<double>(corpus.size());
  stats.translated_to_teacher *= inv;
  stats.english_to_teacher *= inv;
  return stats;
}

// ---------------------------------------------------------------------------
// Finite differences

FiniteDiffResult finite_diff_check(const ParallelPair& pair, const EncoderParams& student,
                                   const FrozenEncoder& teacher, const ImageFeatureStore& images,
                                   const LossConfig& cfg, double eps) {
  if (!(eps > 0.0) || eps > 1e-2) throw ValidationError("eps must be in (0, 1e-2]");
  const double h = nearest_power_of_two(eps);
  const ParamGradients analytic = gradients(pair, teacher, student, images, cfg);

  EncoderParams probe = student;
  FiniteDiffResult result;
  auto compare = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    const double plus_at = param;
    const double f_plus = total_loss(pair, teacher, probe, images, cfg).total;
    param = saved - h;
    const double minus_at = param;
    const double f_minus = total_loss(pair, teacher, probe, images, cfg).total;
    param = saved;
    const double numeric = (f_plus - f_minus) / (plus_at - minus_at);
    const double abs_err = std::abs(grad - numeric);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-12});
    result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
    result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
    ++result.parameters_checked;
  };

  std::set<TokenId> rows;
  for (const std::string* text : {&pair.english_text, &pair.translated_text}) {
    for (TokenId t : tokenize(*text, student.vocab_size)) {
      if (t != kImageToken) rows.insert(t);
    }
  }
  for (TokenId r : rows) {
    for (std::size_t j = 0; j < student.dim; ++j) compare(probe.embedding_table(r, j), analytic.table(r, j));
  }
  if (pair.image_ref) {
    for (std::size_t a = 0; a < student.feature_dim; ++a) {
      for (std::size_t j = 0; j < student.dim; ++j) {
        compare(probe.image_projector(a, j), analytic.projector_at(a, j));
      }
    }
  }
  return result;
}

}  // namespace mmkd
