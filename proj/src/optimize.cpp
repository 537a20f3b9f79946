// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/optimize.hpp"

#include "promptforge/gradopt/gradopt.hpp"
#include "promptforge/textopt/textopt.hpp"

namespace promptforge {

OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset,
                            const std::optional<std::string>& p_init, const RunHooks& hooks) {
  validate(config);
  const std::string seed = resolve_p_init(dataset, p_init);
  if (config.method == Method::greater) return gradopt::optimize(config, dataset, seed, hooks);
  return textopt::optimize(config, dataset, seed, hooks);
}

}  // namespace promptforge
