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

#include "mmkd/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <unordered_set>

#include "mmkd/bench_builder.hpp"
#include "mmkd/corpus.hpp"
#include "mmkd/distill.hpp"
#include "mmkd/encoder.hpp"
#include "mmkd/eval.hpp"
#include "mmkd/parallel.hpp"
#include "mmkd/random.hpp"
#include "mmkd/translate_prep.hpp"

namespace mmkd::cli {
namespace {

namespace fs = std::filesystem;

fs::path input_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("MMKD_DATA_DIR"); dir && *dir) return fs::path(dir) / path;
  }
  return path;
}

// "out/pairs.jsonl" + "discards" -> "out/pairs.discards.jsonl"
fs::path sidecar(const fs::path& out, const std::string& tag) {
  fs::path p = out;
  p.replace_extension();
  p += "." + tag + ".jsonl";
  return p;
}

void require_distinct(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  std::set<fs::path> seen;
  for (const auto& p : inputs) seen.insert(fs::weakly_canonical(p));
  for (const auto& p : outputs) {
    if (!seen.insert(fs::weakly_canonical(p)).second) {
      throw ValidationError("path '" + p.string() + "' is used more than once");
    }
  }
}

std::vector<Language> parse_languages(const std::vector<std::string>& codes) {
  if (codes.empty()) throw ValidationError("--langs must name at least one language");
  std::vector<Language> out;
  for (const auto& c : codes) {
    const Language l = parse_language(c);
    if (std::find(out.begin(), out.end(), l) != out.end()) throw ValidationError("language " + c + " listed twice");
    out.push_back(l);
  }
  return out;
}

ImageFeatureStore image_store(const std::string& path, std::size_t dim) {
  if (path.empty()) return ImageFeatureStore::synthetic(dim);
  ImageFeatureStore store = ImageFeatureStore::load(input_path(path));
  if (store.dim() != dim) {
    throw ValidationError("image features have dimension " + std::to_string(store.dim()) + ", model expects " +
                          std::to_string(dim));
  }
  return store;
}

Json scalar_or_list(const std::vector<std::string>& values) {
  if (values.size() == 1) return values.front();
  return Json(values);
}

// Fills options that were not given on the command line from a JSON object.
void apply_config(CLI::App& sub, const std::string& path) {
  std::optional<Json> cfg;
  for_each_record(input_path(path), [&](std::size_t, const Json& obj) {
    if (cfg) throw ValidationError("config file must hold a single object");
    cfg = obj;
  });
  if (!cfg) throw ValidationError("config file '" + path + "' is empty");
  for (const auto& [key, value] : cfg->items()) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt || key == "config") throw ValidationError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    auto as_text = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(as_text(v));
    } else {
      opt->add_result(as_text(value));
    }
    opt->run_callback();
  }
}

Provenance provenance_of(const CLI::App& sub) {
  Provenance prov;
  prov.command = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      prov.config[name] = scalar_or_list(opt->results());
    } else if (!opt->get_default_str().empty()) {
      prov.config[name] = opt->get_default_str();
    }
  }
  return prov;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
  std::string config;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

struct PrepArgs {
  std::string in, out, discards, translator = "identity";
  std::vector<std::string> langs{"fr", "de", "it", "es"};
  std::size_t limit = 10'000;
};

int cmd_translate_prep(const PrepArgs& a, const Common& c, const Provenance& prov, std::ostream& out) {
  const fs::path in = input_path(a.in);
  const fs::path dst = a.out;
  const fs::path disc = a.discards.empty() ? sidecar(dst, "discards") : fs::path(a.discards);
  require_distinct({in}, {dst, disc});
  const std::vector<Language> langs = parse_languages(a.langs);
  const auto translator = make_translator(a.translator);
  const std::vector<RawInstance> raw = read_instances(in);
  const std::vector<RawInstance> kept = truncate_per_task(raw, a.limit);
  const PrepResult res = prepare_corpus(kept, langs, *translator, c.jobs);
  write_pairs(dst, res.pairs, prov);
  write_discards(disc, res.discards, prov);
  out << "instances " << kept.size() << ", pairs " << res.pairs.size() << ", discarded " << res.discards.size()
      << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string pairs, out, report, teacher_out, init, images;
  std::optional<std::uint64_t> init_seed;
  EncoderConfig encoder;
  LossConfig loss;
};

int cmd_train(TrainArgs a, const Common& c, const Provenance& prov, std::ostream& out) {
  const fs::path pairs_path = input_path(a.pairs);
  const fs::path dst = a.out;
  const fs::path report = a.report.empty() ? sidecar(dst, "report") : fs::path(a.report);
  std::vector<fs::path> outputs{dst, report};
  if (!a.teacher_out.empty()) outputs.emplace_back(a.teacher_out);
  std::vector<fs::path> inputs{pairs_path};
  if (!a.init.empty()) inputs.push_back(input_path(a.init));
  require_distinct(inputs, outputs);

  a.loss.seed = c.seed;
  a.loss.jobs = c.jobs;
  a.loss.validate();
  const EncoderParams initial =
      a.init.empty() ? EncoderParams::init(a.encoder, a.init_seed.value_or(c.seed)) : load_checkpoint(input_path(a.init));
  const FrozenEncoder teacher = clone_frozen(initial);
  const ImageFeatureStore images = image_store(a.images, initial.feature_dim);
  const std::vector<ParallelPair> corpus = read_pairs(pairs_path);

  TrainResult res = train(corpus, teacher, initial, images, a.loss);
  save_checkpoint(dst, res.student, prov);
  res.report.write(report, prov);
  if (!a.teacher_out.empty()) save_checkpoint(a.teacher_out, teacher.params(), prov);
  char buf[128];
  std::snprintf(buf, sizeof buf, "steps %zu, mean total %.6g -> %.6g\n", res.report.steps,
                res.report.initial_mean_total, res.report.final_mean_total);
  out << buf;
  return kExitOk;
}

struct BenchArgs {
  std::string manifests, out, style = "plain";
};

int cmd_build_bench(const BenchArgs& a, const Common& c, const Provenance& prov, std::ostream& out) {
  const fs::path manifests_path = input_path(a.manifests);
  require_distinct({manifests_path}, {a.out});
  const FormattingStyle style = parse_style(a.style);
  std::vector<Dataset> datasets;
  for (const auto& m : read_manifests(manifests_path)) {
    datasets.push_back(load_dataset(m, manifests_path.parent_path()));
  }
  const auto suites = build_benchmark(datasets, style, c.seed, c.jobs);
  write_suites(a.out, suites, prov);
  std::size_t instances = 0;
  for (const auto& s : suites) instances += s.instances.size();
  out << "suites " << suites.size() << ", instances " << instances << '\n';
  return kExitOk;
}

struct EmbedArgs {
  std::string suite, model, images, out;
};

int cmd_embed(const EmbedArgs& a, const Common& c, const Provenance& prov, std::ostream& out) {
  const fs::path suite_path = input_path(a.suite);
  const fs::path model_path = input_path(a.model);
  require_distinct({suite_path, model_path}, {a.out});
  const EncoderParams params = load_checkpoint(model_path);
  const ReferenceEmbedder embedder(params, image_store(a.images, params.feature_dim));

  std::vector<const Candidate*> unique;
  std::unordered_set<std::string> seen;
  const auto suites = read_suites(suite_path);
  for (const auto& s : suites) {
    for (const auto& inst : s.instances) {
      if (seen.insert(inst.query.key).second) unique.push_back(&inst.query);
      for (const auto& cand : inst.pool) {
        if (seen.insert(cand.key).second) unique.push_back(&cand);
      }
    }
  }
  EmbeddingList list(unique.size());
  parallel_for(unique.size(), c.jobs, [&](std::size_t i) {
    const Candidate& cand = *unique[i];
    const std::vector<double> v = embedder.embed(EncodeItem{cand.key, cand.text, cand.image_ref});
    list[i] = {cand.key, EmbeddingVector(v.begin(), v.end())};
  });
  write_embeddings(a.out, list, prov);
  out << "embedded " << list.size() << " items\n";
  return kExitOk;
}

struct EvalArgs {
  std::string suite, model, embeddings, images, out, style, similarity = "cosine", name = "model";
};

int cmd_eval(const EvalArgs& a, const Common& c, const Provenance& prov, std::ostream& out) {
  if (a.model.empty() == a.embeddings.empty()) throw ValidationError("give exactly one of --model or --embeddings");
  const fs::path suite_path = input_path(a.suite);
  const fs::path source = input_path(a.model.empty() ? a.embeddings : a.model);
  require_distinct({suite_path, source}, {a.out});
  const Similarity sim = parse_similarity(a.similarity);

  std::unique_ptr<Embedder> embedder;
  if (!a.model.empty()) {
    EncoderParams params = load_checkpoint(source);
    ImageFeatureStore images = image_store(a.images, params.feature_dim);
    embedder = std::make_unique<ReferenceEmbedder>(std::move(params), std::move(images));
  } else {
    embedder = std::make_unique<PrecomputedEmbedder>(read_embeddings(source));
  }

  std::optional<FormattingStyle> only;
  if (!a.style.empty()) only = parse_style(a.style);
  std::vector<EvalRecord> records;
  std::size_t used = 0;
  for (const auto& suite : read_suites(suite_path)) {
    if (only && suite.style != *only) continue;
    ++used;
    auto recs = evaluate_suite(suite, *embedder, sim, c.jobs);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  if (used == 0) throw ValidationError("no suite in '" + a.suite + "' matches the requested style");
  const AggregateReport rep = aggregate(records);

  RecordWriter w(a.out, prov);
  for (const auto& r : records) w.write(r.to_json());
  w.write(Json{{"summary", rep.to_json()}});
  w.close();
  out << render_table({{a.name, rep}}) << '\n' << render_language_table(rep);
  return kExitOk;
}

struct CompareArgs {
  std::string a, b, out;
  double alpha = 0.05;
};

int cmd_compare(const CompareArgs& a, const Provenance& prov, std::ostream& out) {
  const fs::path pa = input_path(a.a), pb = input_path(a.b);
  require_distinct({pa}, {pb, a.out});
  const auto ra = read_eval_records(pa);
  const auto rb = read_eval_records(pb);
  const ComparisonReport rep = compare_models(ra, rb, a.alpha);
  write_comparison(a.out, rep, prov);
  out << rep.render();
  return kExitOk;
}

struct FdArgs {
  std::string pairs, model, teacher, images, out;
  std::size_t count = 100;
  double eps = 1e-5, tolerance = 1e-4;
  bool image_loss = false;
  EncoderConfig encoder;
};

int cmd_fd_check(const FdArgs& a, const Common& c, const Provenance& prov, std::ostream& out) {
  const fs::path pairs_path = input_path(a.pairs);
  std::vector<fs::path> inputs{pairs_path};
  if (!a.model.empty()) inputs.push_back(input_path(a.model));
  if (!a.teacher.empty()) inputs.push_back(input_path(a.teacher));
  std::vector<fs::path> outputs;
  if (!a.out.empty()) outputs.emplace_back(a.out);
  require_distinct(inputs, outputs);
  if (!(a.eps > 0.0 && a.eps <= 1e-2)) throw ValidationError("--eps must lie in (0, 1e-2]");

  const EncoderParams teacher_params =
      a.teacher.empty() ? EncoderParams::init(a.encoder, c.seed) : load_checkpoint(input_path(a.teacher));
  const FrozenEncoder teacher = clone_frozen(teacher_params);
  const EncoderParams student = a.model.empty() ? teacher_params : load_checkpoint(input_path(a.model));
  const ImageFeatureStore images = image_store(a.images, student.feature_dim);
  LossConfig cfg;
  cfg.use_image_loss = a.image_loss;
  cfg.seed = c.seed;

  std::vector<ParallelPair> corpus = read_pairs(pairs_path);
  if (corpus.empty()) throw ValidationError("no pairs to check");
  // Seeded sample without replacement.
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(stream_seed(c.seed, "fd-check", 0));
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::min(a.count, order.size()));

  std::vector<FiniteDiffResult> results(order.size());
  parallel_for(order.size(), c.jobs, [&](std::size_t i) {
    results[i] = finite_diff_check(corpus[order[i]], student, teacher, images, cfg, a.eps);
  });
  FiniteDiffResult worst;
  for (const auto& r : results) {
    worst.max_relative_error = std::max(worst.max_relative_error, r.max_relative_error);
    worst.max_absolute_error = std::max(worst.max_absolute_error, r.max_absolute_error);
    worst.parameters_checked += r.parameters_checked;
  }
  const bool pass = worst.max_relative_error < a.tolerance;
  const Json summary{{"pairs", order.size()},
                     {"parameters_checked", worst.parameters_checked},
                     {"max_relative_error", worst.max_relative_error},
                     {"max_absolute_error", worst.max_absolute_error},
                     {"tolerance", a.tolerance},
                     {"pass", pass}};
  if (!a.out.empty()) {
    RecordWriter w(a.out, prov);
    w.write(summary);
    w.close();
  }
  out << dump_line(summary) << '\n';
  if (!pass) throw Error("finite-difference check exceeded tolerance");
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mmkd: multilingual distillation and retrieval benchmark toolkit", "mmkd"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  auto add_common = [&](CLI::App* sub, bool seeded, bool parallel) {
    sub->add_option("--config", common.config, "JSON object of default flag values");
    if (seeded) sub->add_option("--seed", common.seed, "Seed for all randomness");
    if (parallel) sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_encoder = [](CLI::App* sub, EncoderConfig& e) {
    sub->add_option("--vocab", e.vocab_size, "Vocabulary size of a freshly initialised encoder");
    sub->add_option("--dim", e.dim, "Embedding width");
    sub->add_option("--feature-dim", e.feature_dim, "Image feature width");
    sub->add_option("--init-scale", e.init_scale, "Half-width of the uniform initialiser");
  };

  PrepArgs prep;
  auto* s_prep = app.add_subcommand("translate-prep", "Wrap, translate and extract a raw instance file");
  s_prep->add_option("--in", prep.in, "Raw instances (JSONL)")->required();
  s_prep->add_option("--out", prep.out, "Parallel pairs output")->required();
  s_prep->add_option("--discards", prep.discards, "Discard log (default <out>.discards.jsonl)");
  s_prep->add_option("--langs", prep.langs, "Target languages")->delimiter(',');
  s_prep->add_option("--translator", prep.translator, "identity | dict:<path> | cmd:<command>");
  s_prep->add_option("--limit-per-task", prep.limit, "Instances kept per task");
  add_common(s_prep, false, true);

  TrainArgs tr;
  std::uint64_t init_seed = 0;
  auto* s_train = app.add_subcommand("train", "Distil a student from a frozen copy of the encoder");
  s_train->add_option("--pairs", tr.pairs, "Parallel pairs (JSONL)")->required();
  s_train->add_option("--out", tr.out, "Student checkpoint")->required();
  s_train->add_option("--report", tr.report, "Training report (default <out stem>.report.jsonl)");
  s_train->add_option("--teacher-out", tr.teacher_out, "Also write the teacher checkpoint");
  s_train->add_option("--init", tr.init, "Initial checkpoint (default: fresh encoder)");
  auto* init_seed_opt = s_train->add_option("--init-seed", init_seed, "Seed of a fresh encoder (default --seed)");
  s_train->add_option("--images", tr.images, "Image feature store (default: synthetic)");
  s_train->add_option("--lr", tr.loss.learning_rate, "Learning rate");
  s_train->add_option("--batch", tr.loss.batch_size, "Batch size");
  s_train->add_option("--epochs", tr.loss.epochs, "Epochs");
  s_train->add_flag("--image-loss", tr.loss.use_image_loss, "Add the image-span loss");
  add_encoder(s_train, tr.encoder);
  add_common(s_train, true, true);

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("build-bench", "Build retrieval suites from dataset manifests");
  s_bench->add_option("--manifests", bench.manifests, "Dataset manifests (JSONL)")->required();
  s_bench->add_option("--out", bench.out, "Suite file")->required();
  s_bench->add_option("--style", bench.style, "plain | punctuation");
  add_common(s_bench, true, true);

  EmbedArgs emb;
  auto* s_embed = app.add_subcommand("embed", "Export pooled embeddings for every suite item");
  s_embed->add_option("--suite", emb.suite, "Suite file")->required();
  s_embed->add_option("--model", emb.model, "Encoder checkpoint")->required();
  s_embed->add_option("--images", emb.images, "Image feature store (default: synthetic)");
  s_embed->add_option("--out", emb.out, "Embedding store")->required();
  add_common(s_embed, false, true);

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Score suites and report P@1");
  s_eval->add_option("--suite", ev.suite, "Suite file")->required();
  s_eval->add_option("--model", ev.model, "Encoder checkpoint");
  s_eval->add_option("--embeddings", ev.embeddings, "Precomputed embedding store");
  s_eval->add_option("--images", ev.images, "Image feature store (default: synthetic)");
  s_eval->add_option("--style", ev.style, "Only score suites built with this style");
  s_eval->add_option("--similarity", ev.similarity, "cosine | dot");
  s_eval->add_option("--name", ev.name, "Row label in the summary table");
  s_eval->add_option("--out", ev.out, "Evaluation records")->required();
  add_common(s_eval, false, true);

  CompareArgs cmp;
  auto* s_cmp = app.add_subcommand("compare", "McNemar test per cell between two record files");
  s_cmp->add_option("--a", cmp.a, "Records of model A")->required();
  s_cmp->add_option("--b", cmp.b, "Records of model B")->required();
  s_cmp->add_option("--alpha", cmp.alpha, "Significance level");
  s_cmp->add_option("--out", cmp.out, "Comparison report")->required();
  add_common(s_cmp, false, false);

  FdArgs fd;
  auto* s_fd = app.add_subcommand("fd-check", "Compare analytic gradients with central differences");
  s_fd->add_option("--pairs", fd.pairs, "Parallel pairs (JSONL)")->required();
  s_fd->add_option("--model", fd.model, "Student checkpoint (default: the teacher)");
  s_fd->add_option("--teacher", fd.teacher, "Teacher checkpoint (default: fresh encoder from --seed)");
  s_fd->add_option("--images", fd.images, "Image feature store (default: synthetic)");
  s_fd->add_option("--count", fd.count, "Pairs to check");
  s_fd->add_option("--eps", fd.eps, "Perturbation size");
  s_fd->add_option("--tolerance", fd.tolerance, "Maximum relative error");
  s_fd->add_flag("--image-loss", fd.image_loss, "Include the image-span loss");
  s_fd->add_option("--out", fd.out, "Summary output");
  add_encoder(s_fd, fd.encoder);
  add_common(s_fd, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!common.config.empty()) apply_config(*sub, common.config);
    const Provenance prov = provenance_of(*sub);
    if (sub == s_prep) return cmd_translate_prep(prep, common, prov, out);
    if (sub == s_train) {
      if (init_seed_opt->count() > 0) tr.init_seed = init_seed;
      return cmd_train(tr, common, prov, out);
    }
    if (sub == s_bench) return cmd_build_bench(bench, common, prov, out);
    if (sub == s_embed) return cmd_embed(emb, common, prov, out);
    if (sub == s_eval) return cmd_eval(ev, common, prov, out);
    if (sub == s_cmp) return cmd_compare(cmp, prov, out);
    if (sub == s_fd) return cmd_fd_check(fd, common, prov, out);
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"mmkd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mmkd::cli
