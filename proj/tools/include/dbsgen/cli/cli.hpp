// Copyright 2026 The DBSGen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbsgen::cli {

/// Exit statuses of run_cli.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,    // bad flag, subcommand or config
  kDataError = 2,     // unreadable or inconsistent input, I/O failure
  kNumericError = 3,  // non-finite loss during optimization
};

/// Entry point of the `dbsgen` tool. `args` excludes the program name.
/// Subcommands: run, eval, synth, report (see README). Progress and tables go
/// to `out`, diagnostics and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbsgen::cli
