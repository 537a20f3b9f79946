// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-position planted task for the gradient optimizer: a one-token
// prompt, no reasoning chain, so the loss is a function of that token alone
// and can be minimised exhaustively over the vocabulary.

#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "promptforge/core/types.hpp"
#include "promptforge/dataio/dataset_io.hpp"
#include "promptforge/gradopt/gradopt.hpp"

namespace pf_test {

inline std::string tiny_model_dir(int seed = 0) {
  return std::string(PROMPTFORGE_SOURCE_DIR) + "/models/tiny-reference-seed" + std::to_string(seed);
}

inline promptforge::TaskDataset planted_gradient_dataset() {
  std::vector<nlohmann::json> recs = {
      {{"id", "a"}, {"question", "2 + 3 ="}, {"prompt", "x"}, {"answer", "5"}},
      {{"id", "b"}, {"question", "4 + 4 ="}, {"prompt", "x"}, {"answer", "8"}},
      {{"id", "c"}, {"question", "1 + 6 ="}, {"prompt", "x"}, {"answer", "7"}},
  };
  return promptforge::dataio::from_records(recs, "planted-gradient");
}

inline promptforge::OptimizerConfig planted_gradient_config(int seed = 0) {
  promptforge::OptimizerConfig c = promptforge::default_config(promptforge::Method::greater);
  c.task_model.kind = promptforge::ModelKind::local;
  c.task_model.identifier = tiny_model_dir(seed);
  c.task_model.generation.max_new_tokens = 4;
  c.rounds = 3;
  c.positions_per_round = 1;
  c.max_chain_tokens = 0;
  c.extraction_prompt = "answer: ";
  c.seed = 11;
  return c;
}

/// (token, exact mean loss) for every single-token prompt, lowest loss first.
inline std::vector<std::pair<int, double>> exhaustive_single_token_losses(
    const promptforge::TaskDataset& dataset, const promptforge::OptimizerConfig& config,
    const promptforge::models::DifferentiableBackend& backend, const std::string& p_init) {
  namespace pg = promptforge::gradopt;
  auto traces = pg::build_traces(dataset, {}, p_init, backend, config.extraction_prompt, config.max_chain_tokens);
  std::vector<std::pair<int, double>> losses;
  for (int t = 0; t < backend.vocab_size(); ++t) {
    pg::set_prompt(traces, {t});
    losses.emplace_back(t, pg::mean_loss(traces, backend, config.loss));
  }
  std::stable_sort(losses.begin(), losses.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return losses;
}

}  // namespace pf_test
