/* Copyright 2026 The MSI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef MSI_CLI_RUNNER_HPP_
#define MSI_CLI_RUNNER_HPP_

#include <string>
#include <vector>

namespace msi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitAblationFailed = 1,
  kExitConfigError = 2,
  kExitNumericalAbort = 3,
};

// Parses the command line, runs the verb and maps errors to exit codes.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace msi::cli

#endif  // MSI_CLI_RUNNER_HPP_
