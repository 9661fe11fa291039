// Copyright 2026 The MBL Authors.
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

#ifndef MBL_CLI_HPP_
#define MBL_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "mbl/error.hpp"

namespace mbl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

int exit_code(ErrorCategory category);

// Runs the `mbl` command line. args[0] is the program name. Results go to
// `out`, diagnostics to `err`; the return value is the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mbl

#endif  // MBL_CLI_HPP_
