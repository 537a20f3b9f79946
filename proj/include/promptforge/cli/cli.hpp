// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace promptforge::cli {

/// Exit codes shared by every command.
enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Entry point of the `promptforge` executable: optimize, evaluate, compare
/// and serve. Output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace promptforge::cli
