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

// Line-record files: one JSON object per line, UTF-8, no BOM. A file may
// start with a single provenance line of the form {"provenance": {...}},
// which readers skip.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmkd {

using Json = nlohmann::json;

// Describes the run that produced an output file. Contains no timestamps
// so identical runs produce identical bytes.
struct Provenance {
  std::string command;
  Json config = Json::object();

  Json to_json() const;
};

// Calls `visit(line_number, object)` for every non-blank, non-provenance
// line. Parse failures and non-object lines throw FormatError.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const Json&)>& visit);

// Returns the provenance object of a file, if it has one.
std::optional<Json> read_provenance(const std::filesystem::path& path);

// Writes records one per line. Output is opened in binary mode so line
// endings are '\n' on every platform.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path,
                        const std::optional<Provenance>& provenance = std::nullopt);

  void write(const Json& record);
  // Writes a pre-serialized object verbatim; it must not contain newlines.
  void write_raw(const std::string& line);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Serialize a JSON value on a single line with stable key order.
std::string dump_line(const Json& value);

// Helpers for required/optional fields that throw with the field name.
const Json& require_field(const Json& obj, const char* name);
std::string require_string(const Json& obj, const char* name);
std::optional<std::string> optional_string(const Json& obj, const char* name);

}  // namespace mmkd
