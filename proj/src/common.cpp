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

#include "mmkd/common.hpp"

#include <algorithm>
#include <cctype>

namespace mmkd {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::EN: return "EN";
    case Language::FR: return "FR";
    case Language::DE: return "DE";
    case Language::IT: return "IT";
    case Language::ES: return "ES";
  }
  return "??";
}

Language parse_language(std::string_view code) {
  const std::string u = upper(code);
  for (Language lang : kAllLanguages) {
    if (to_string(lang) == u) return lang;
  }
  throw ValidationError("unknown language code '" + std::string(code) +
                        "' (expected one of EN, FR, DE, IT, ES)");
}

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::I2T: return "I2T";
    case TaskKind::T2I: return "T2I";
    case TaskKind::VQA: return "VQA";
    case TaskKind::VG: return "VG";
    case TaskKind::C: return "C";
  }
  return "??";
}

TaskKind parse_task_kind(std::string_view name) {
  const std::string u = upper(name);
  for (TaskKind task : kAllTasks) {
    if (to_string(task) == u) return task;
  }
  throw ValidationError("unknown task kind '" + std::string(name) +
                        "' (expected one of I2T, T2I, VQA, VG, C)");
}

std::string_view to_string(FormattingStyle style) {
  return style == FormattingStyle::Plain ? "plain" : "punctuation";
}

FormattingStyle parse_style(std::string_view name) {
  const std::string u = upper(name);
  if (u == "PLAIN") return FormattingStyle::Plain;
  if (u == "PUNCTUATION") return FormattingStyle::Punctuation;
  throw ValidationError("unknown formatting style '" + std::string(name) +
                        "' (expected plain or punctuation)");
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace mmkd
