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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmkd {

inline constexpr std::string_view kVersion = "0.1.0";

// Literal used by the upstream embedding model to mark where image
// embeddings enter a text sequence.
inline constexpr std::string_view kImagePlaceholder = "<|image_1|>\n";

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented contract (bad record, unsupported option).
// The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A record file could not be parsed; carries the 1-based line number.
class FormatError : public ValidationError {
 public:
  FormatError(std::string path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

enum class Language { EN, FR, DE, IT, ES };

inline constexpr std::array<Language, 5> kAllLanguages = {
    Language::EN, Language::FR, Language::DE, Language::IT, Language::ES};

std::string_view to_string(Language lang);
// Accepts upper or lower case two-letter codes.
Language parse_language(std::string_view code);

// Benchmark task kinds.
enum class TaskKind { I2T, T2I, VQA, VG, C };

inline constexpr std::array<TaskKind, 5> kAllTasks = {
    TaskKind::I2T, TaskKind::T2I, TaskKind::VQA, TaskKind::VG, TaskKind::C};

std::string_view to_string(TaskKind task);
TaskKind parse_task_kind(std::string_view name);

enum class FormattingStyle { Plain, Punctuation };

std::string_view to_string(FormattingStyle style);
FormattingStyle parse_style(std::string_view name);

// Number of non-overlapping occurrences of `needle` in `haystack`.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace mmkd
