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

// Command-line front end. Subcommands: translate-prep, train, build-bench,
// embed, eval, compare, fd-check.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
// `--config FILE` reads a JSON object whose keys are long flag names;
// flags on the command line take precedence. Relative input paths are
// resolved against $MMKD_DATA_DIR when it is set.

#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace mmkd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);
// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace mmkd::cli
