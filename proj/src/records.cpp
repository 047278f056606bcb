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

#include "mmkd/records.hpp"

#include <algorithm>

#include "mmkd/common.hpp"

namespace mmkd {
namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

bool is_provenance(const Json& obj) {
  return obj.is_object() && obj.size() == 1 && obj.contains("provenance");
}

}  // namespace

Json Provenance::to_json() const {
  return Json{{"provenance",
               {{"tool", "mmkd"},
                {"version", std::string(kVersion)},
                {"command", command},
                {"config", config}}}};
}

std::string dump_line(const Json& value) {
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const Json&)>& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
      throw FormatError(path.string(), line_no, "byte order mark not allowed");
    }
    if (is_blank(line)) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(path.string(), line_no, std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError(path.string(), line_no, "record is not an object");
    if (first_record && is_provenance(obj)) {
      first_record = false;
      continue;
    }
    first_record = false;
    try {
      visit(line_no, obj);
    } catch (const FormatError&) {
      throw;
    } catch (const ValidationError& e) {
      throw FormatError(path.string(), line_no, e.what());
    } catch (const Json::exception& e) {
      throw FormatError(path.string(), line_no, e.what());
    }
  }
}

std::optional<Json> read_provenance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    Json obj = Json::parse(line, nullptr, false);
    if (is_provenance(obj)) return obj.at("provenance");
    return std::nullopt;
  }
  return std::nullopt;
}

RecordWriter::RecordWriter(const std::filesystem::path& path,
                           const std::optional<Provenance>& provenance)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot write '" + path.string() + "'");
  if (provenance) write(provenance->to_json());
}

void RecordWriter::write(const Json& record) { write_raw(dump_line(record)); }

void RecordWriter::write_raw(const std::string& line) {
  out_ << line << '\n';
  if (!out_) throw Error("write failed on '" + path_.string() + "'");
}

void RecordWriter::close() {
  out_.close();
  if (out_.fail()) throw Error("closing '" + path_.string() + "' failed");
}

const Json& require_field(const Json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) {
    throw ValidationError(std::string("missing field '") + name + "'");
  }
  return *it;
}

std::string require_string(const Json& obj, const char* name) {
  const Json& v = require_field(obj, name);
  if (!v.is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

}  // namespace mmkd
