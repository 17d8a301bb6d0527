/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>

namespace tracelab {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    exit_ok = 0,
    /// An attack verdict differs from the configured expectation.
    exit_expectation = 1,
    /// Bad flags, bad config, missing inputs.
    exit_config = 2,
};

/// Entry point behind the `tracelab` binary. Subcommands: simulate, attack,
/// searchspace, metrics, report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tracelab
