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

// Writes seeded synthetic fixtures for the mmkd pipeline.

#include <CLI11.hpp>

#include <iostream>

#include "mmkd/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mmkd-synth: seeded synthetic fixtures", "mmkd-synth"};
  app.require_subcommand(1);
  std::size_t words = 300;
  std::uint64_t seed = 0;
  app.add_option("--words", words, "Word bank size")->capture_default_str();
  app.add_option("--seed", seed, "Seed")->capture_default_str();

  std::string out;
  std::size_t count = 500;
  auto* s_inst = app.add_subcommand("instances", "Raw training instances");
  s_inst->add_option("--count", count)->capture_default_str();
  s_inst->add_option("--out", out)->required();

  auto* s_dict = app.add_subcommand("dictionary", "Word dictionary for the dict: translator");
  s_dict->add_option("--out", out)->required();

  std::string lang = "fr";
  double image_fraction = 0.0;
  auto* s_pairs = app.add_subcommand("pairs", "Dictionary-translated parallel pairs");
  s_pairs->add_option("--count", count)->capture_default_str();
  s_pairs->add_option("--lang", lang)->capture_default_str();
  s_pairs->add_option("--image-fraction", image_fraction)->capture_default_str();
  s_pairs->add_option("--out", out)->required();

  std::string scale = "small";
  auto* s_data = app.add_subcommand("datasets", "Benchmark source datasets and manifests");
  s_data->add_option("--scale", scale)->check(CLI::IsMember({"small", "full"}))->capture_default_str();
  s_data->add_option("--dir", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    using namespace mmkd;
    const synth::WordBank bank = synth::make_word_bank(words, seed);
    if (s_inst->parsed()) {
      write_instances(out, synth::instances(count, bank, seed));
    } else if (s_dict->parsed()) {
      bank.translator().save(out);
    } else if (s_pairs->parsed()) {
      write_pairs(out, synth::parallel_corpus(count, bank, parse_language(lang), seed, image_fraction));
    } else if (s_data->parsed()) {
      synth::write_datasets(out, synth::benchmark_datasets(
                                     scale == "full" ? synth::Scale::Full : synth::Scale::Small, bank, seed));
    }
  } catch (const mmkd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
