// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "promptforge/core/run.hpp"
#include "promptforge/core/types.hpp"

namespace promptforge {

/// Runs config.method on `dataset`. Without `p_init` the first example's
/// prompt seeds the search. The config is validated before any model call.
OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset,
                            const std::optional<std::string>& p_init = std::nullopt, const RunHooks& hooks = {});

}  // namespace promptforge
