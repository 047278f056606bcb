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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mmkd/bench_builder.hpp"
#include "mmkd/cli.hpp"
#include "mmkd/distill.hpp"
#include "mmkd/encoder.hpp"
#include "mmkd/eval.hpp"
#include "mmkd/translate_prep.hpp"

namespace py = pybind11;
using namespace mmkd;

namespace {

PooledVector last(std::vector<double> v) { return {std::move(v), Pooling::LastToken}; }
PooledVector mean(std::vector<double> v) { return {std::move(v), Pooling::Mean}; }

py::dict outcome_dict(const ExtractionOutcome& o) {
  py::dict d;
  d["extracted"] = o.extracted();
  d["query"] = o.query;
  d["pos"] = o.pos;
  d["neg"] = o.neg;
  d["reason"] = o.reason_code ? std::optional<std::string>(std::string(to_string(*o.reason_code))) : std::nullopt;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mmkd, m) {
  m.doc() = "Bindings for the mmkd distillation and benchmark toolkit";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("tokenize", &tokenize, py::arg("text"), py::arg("vocab_size"));
  m.def("encoder_checksum", [](std::size_t vocab, std::size_t dim, std::size_t feat, double scale, std::uint64_t seed) {
    return checksum(EncoderParams::init({vocab, dim, feat, scale}, seed));
  }, py::arg("vocab_size"), py::arg("dim"), py::arg("feature_dim"), py::arg("init_scale"), py::arg("seed"));

  m.def("mse", [](const std::vector<double>& a, const std::vector<double>& b) { return mse(a, b); });
  m.def("loss_e", [](std::vector<double> t, std::vector<double> sx, std::vector<double> sy) {
    return loss_e(last(std::move(t)), last(std::move(sx)), last(std::move(sy)));
  }, py::arg("t_x"), py::arg("s_x"), py::arg("s_y"));
  m.def("loss_i", [](std::vector<double> t, std::vector<double> sx, std::vector<double> sy) {
    return loss_i(mean(std::move(t)), mean(std::move(sx)), mean(std::move(sy)));
  }, py::arg("t_img_x"), py::arg("s_img_x"), py::arg("s_img_y"));

  m.def("wrap_for_translation", [](const std::string& id, const std::string& task, const std::string& query,
                                   const std::string& pos, std::optional<std::string> neg,
                                   std::optional<std::string> image_ref) {
    RawInstance r;
    r.id = id;
    r.task = task;
    r.query_text = query;
    r.pos_text = pos;
    r.neg_text = std::move(neg);
    r.image_ref = std::move(image_ref);
    const WrappedBlock b = wrap_for_translation(r);
    return py::make_tuple(b.text, b.had_placeholder, b.had_negative);
  }, py::arg("id"), py::arg("task"), py::arg("query"), py::arg("pos"), py::arg("neg") = py::none(),
        py::arg("image_ref") = py::none());
  m.def("extract_translation", [](const std::string& text, const std::string& lang, bool had_placeholder,
                                  bool had_negative) {
    return outcome_dict(extract_translation(text, default_lexicon(parse_language(lang)), had_placeholder, had_negative));
  }, py::arg("text"), py::arg("language"), py::arg("had_placeholder") = false, py::arg("had_negative") = false);

  m.def("pool_size", [](std::size_t cardinality, const std::string& task, std::optional<std::size_t> classes) {
    return pool_size(cardinality, parse_task_kind(task), classes);
  }, py::arg("cardinality"), py::arg("task"), py::arg("class_count") = py::none());
  m.def("format_query", [](const std::string& text, const std::string& task, const std::string& lang,
                           const std::string& style) {
    return format_query(text, parse_task_kind(task), parse_language(lang), parse_style(style));
  }, py::arg("text"), py::arg("task"), py::arg("language"), py::arg("style") = "plain");
  m.def("format_target", [](const std::string& text, const std::string& task, const std::string& lang,
                            const std::string& style) {
    return format_target(text, parse_task_kind(task), parse_language(lang), parse_style(style));
  }, py::arg("text"), py::arg("task"), py::arg("language"), py::arg("style") = "plain");

  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); });
  m.def("precision_at_1", [](const std::vector<bool>& correct) {
    std::vector<EvalRecord> recs(correct.size());
    for (std::size_t i = 0; i < correct.size(); ++i) recs[i].correct = correct[i];
    return precision_at_1(recs);
  });
  m.def("mcnemar", [](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    const auto r = mcnemar({a, b, c, d});
    py::dict out;
    out["method"] = std::string(to_string(r.method));
    out["statistic"] = r.statistic;
    out["p_value"] = r.p_value;
    return out;
  }, py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
